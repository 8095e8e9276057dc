#pragma once

// JSON layout: complex numbers are [re, im] pairs, matrices are row-major
// nested arrays, vectors are flat arrays.

#include <json.hpp>

#include "selfcal/array_sim.hpp"
#include "selfcal/recovery.hpp"
#include "selfcal/solver.hpp"

namespace selfcal {

using json = nlohmann::json;

json complex_to_json(cplx value);
cplx complex_from_json(const json &j);

json matrix_to_json(const CMatrix &m);
CMatrix matrix_from_json(const json &j);

json vector_to_json(const CVector &v);
CVector vector_from_json(const json &j);

json array_config_to_json(const ArrayConfig &cfg);
/// Accepts either "grid_deg": [...] or "grid": {start_deg, step_deg, count}.
ArrayConfig array_config_from_json(const json &j);

json scene_to_json(const Scene &scene);
Scene scene_from_json(const json &j);

json measurement_to_json(const MeasurementSet &ms);
MeasurementSet measurement_from_json(const json &j);

json solve_report_to_json(const SolveReport &report);

/// Report without the lifted matrix (which can be large).
json recovery_result_to_json(const RecoveryResult &result, std::span<const double> grid_deg);

} // namespace selfcal
