#pragma once

// JSON model documents and deterministic result serialization.
//
// Model document:
//   {"d": 2,
//    "couplings": [[[1, 0], [0, 1]]],
//    "s": [[0, 0], [0, 0]],
//    "prior": {"discrete": {"atoms": [[1, 1], [-1, -1]], "weights": [0.5, 0.5]}}}
// or "prior": {"gaussian": {"cov": [[1, 0], [0, 1]]}}.
//
// Rotationally invariant document:
//   {"alpha": 1, "lambda": 1, "prior": {...scalar prior...},
//    "tau": {"atoms": [1], "weights": [1]}}

#include <string>

#include <json.hpp>

#include "rslimits/potential.hpp"
#include "rslimits/rotinv.hpp"

namespace rslimits {

using Json = nlohmann::ordered_json;

// Errors name the offending field, e.g. "prior.discrete.weights: ...".
ModelSpec parse_model(const std::string& json_text);
ModelSpec model_from_json(const Json& doc);
Json model_to_json(const ModelSpec& m);
std::string serialize_model(const ModelSpec& m);

RotInvModel parse_rotinv(const std::string& json_text);
Json spectrum_to_json(const SpectralDistribution& tau);

Json matrix_to_json(const Matrix& m);

// 17 significant digits; integral values keep a trailing ".0"; non-finite
// values become null.
std::string format_real(double v);

// Pretty-printed JSON with format_real for every floating-point number.
std::string dump_json(const Json& j);

}  // namespace rslimits
