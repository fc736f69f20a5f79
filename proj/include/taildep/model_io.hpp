#pragma once

// Text serialization of fitted models.
//
//   taildep-model,1
//   kind,<triangular|onefactor|mvnormal|mvt|clayton|gumbel|of-gaussian|of-t>
//   name,row,col,value
//   mu,0,0,0.0132
//   ...
//
// Values use the shortest round-trip decimal form, so a load reproduces the
// saved doubles bit for bit.

#include "taildep/baselines.hpp"
#include "taildep/dependence_models.hpp"

#include <iosfwd>
#include <string>
#include <variant>

namespace taildep {

using AnyModel = std::variant<TriangularModel, OneFactorModel, BaselineModel>;

inline constexpr int kModelFormatVersion = 1;

[[nodiscard]] std::string model_kind(const AnyModel& model);
[[nodiscard]] std::size_t model_dim(const AnyModel& model);

void write_model(std::ostream& out, const AnyModel& model);
/// Throws std::invalid_argument naming the line or the missing field.
[[nodiscard]] AnyModel read_model(std::istream& in);

[[nodiscard]] JointSampler make_sampler(const AnyModel& model);

}  // namespace taildep
