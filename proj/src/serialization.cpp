#include "selfcal/serialization.hpp"

namespace selfcal {

json complex_to_json(cplx value) { return json::array({value.real(), value.imag()}); }

cplx complex_from_json(const json &j) {
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument("complex value must be [re, im]");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json matrix_to_json(const CMatrix &m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j)
            row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix matrix_from_json(const json &j) {
    if (!j.is_array())
        throw std::invalid_argument("matrix must be a nested array");
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows > 0 ? static_cast<Index>(j.at(0).size()) : 0;
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json &row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Index>(row.size()) != cols)
            throw std::invalid_argument("matrix rows differ in length");
        for (Index k = 0; k < cols; ++k)
            m(i, k) = complex_from_json(row.at(static_cast<std::size_t>(k)));
    }
    return m;
}

json vector_to_json(const CVector &v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(complex_to_json(v(i)));
    return out;
}

CVector vector_from_json(const json &j) {
    if (!j.is_array())
        throw std::invalid_argument("vector must be an array");
    CVector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i)
        v(i) = complex_from_json(j.at(static_cast<std::size_t>(i)));
    return v;
}

json array_config_to_json(const ArrayConfig &cfg) {
    return {{"num_sensors", cfg.num_sensors},
            {"spacing_ratio", cfg.spacing_ratio},
            {"calib_dim", cfg.calib_dim},
            {"grid_deg", cfg.grid_deg}};
}

ArrayConfig array_config_from_json(const json &j) {
    ArrayConfig cfg;
    cfg.num_sensors = j.value("num_sensors", cfg.num_sensors);
    cfg.spacing_ratio = j.value("spacing_ratio", cfg.spacing_ratio);
    cfg.calib_dim = j.value("calib_dim", cfg.calib_dim);
    if (j.contains("grid_deg")) {
        cfg.grid_deg = j.at("grid_deg").get<std::vector<double>>();
    } else {
        const json grid = j.value("grid", json::object());
        cfg.grid_deg = ArrayConfig::uniform_grid(grid.value("start_deg", -90.0),
                                                 grid.value("step_deg", 1.0),
                                                 grid.value("count", 180));
    }
    cfg.validate();
    return cfg;
}

json scene_to_json(const Scene &scene) {
    return {{"true_doas_deg", scene.true_doas_deg},
            {"support", scene.support},
            {"num_snapshots", scene.num_snapshots},
            {"noise_sigma", scene.noise_sigma},
            {"calib_coeffs", vector_to_json(scene.calib_coeffs)},
            {"source_matrix", matrix_to_json(scene.source)}};
}

Scene scene_from_json(const json &j) {
    Scene s;
    s.true_doas_deg = j.at("true_doas_deg").get<std::vector<double>>();
    s.support = j.at("support").get<std::vector<int>>();
    s.num_snapshots = j.at("num_snapshots").get<int>();
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.calib_coeffs = vector_from_json(j.at("calib_coeffs"));
    s.source = matrix_from_json(j.at("source_matrix"));
    return s;
}

json measurement_to_json(const MeasurementSet &ms) {
    json out = {{"rng_seed", ms.rng_seed}, {"Y", matrix_to_json(ms.Y)}};
    if (ms.scene)
        out["scene"] = scene_to_json(*ms.scene);
    return out;
}

MeasurementSet measurement_from_json(const json &j) {
    MeasurementSet ms;
    ms.rng_seed = j.value("rng_seed", std::uint64_t{0});
    ms.Y = matrix_from_json(j.at("Y"));
    if (j.contains("scene") && !j.at("scene").is_null())
        ms.scene = scene_from_json(j.at("scene"));
    return ms;
}

json solve_report_to_json(const SolveReport &report) {
    return {{"objective", report.objective},
            {"residual_norm", report.residual_norm},
            {"iterations", report.iterations},
            {"converged", report.converged},
            {"infeasible_tolerance", report.infeasible_tolerance},
            {"backend", to_string(report.backend)},
            {"trace",
             {{"primal", report.primal_trace},
              {"dual", report.dual_trace},
              {"objective", report.objective_trace}}}};
}

json recovery_result_to_json(const RecoveryResult &result,
                             std::span<const double> grid_deg) {
    std::vector<double> spectrum(result.spectrum.data(),
                                 result.spectrum.data() + result.spectrum.size());
    return {{"doas_deg", result.doas_deg},
            {"h_hat", vector_to_json(result.h_hat)},
            {"rank1_ratio", result.rank1_ratio},
            {"effective_snapshots", result.effective_snapshots},
            {"eta", result.eta},
            {"grid_deg", std::vector<double>(grid_deg.begin(), grid_deg.end())},
            {"spectrum", spectrum},
            {"solve", solve_report_to_json(result.report)}};
}

} // namespace selfcal
