#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "json.hpp"
#include "kgind/kg.hpp"
#include "kgind/model.hpp"

namespace kgind {

/// A small random model, feature set and batch for gradient checking.
struct GradcheckCase {
  std::shared_ptr<Vocabularies> vocab;
  FeatureContext features;
  ModelParams params;
  std::vector<TrainingExample> batch;
  LossConfig loss;
};

/// Random case for the given scorer and loss; embedding width at most 16.
/// Cases whose losses sit within `kink_clearance` of a non-differentiable
/// point (hinge or L1 zero) are redrawn, as are TransE-L2 cases with a
/// residual norm below 0.1.
GradcheckCase make_gradcheck_case(Scorer scorer, LossKind loss, std::uint64_t seed, double kink_clearance = 1e-3);

/// Largest relative error |analytic - numeric| / max(|analytic|, |numeric|, floor)
/// over every trainable entry; numeric by a fourth-order central difference.
double gradient_relative_error(const GradcheckCase& c, double step = 1e-4, double floor = 1e-6,
                               double corrupt_scale = 1.0);

struct GradcheckReport {
  struct Cell {
    Scorer scorer;
    LossKind loss;
    std::size_t configs = 0;
    double max_relative_error = 0.0;
  };
  std::vector<Cell> cells;
  double tolerance = 1e-4;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Runs the scorer x loss grid. `corrupt_scale` != 1 scales the analytic
/// gradient (negative control).
GradcheckReport run_gradcheck(std::size_t configs_per_cell, std::uint64_t seed, double tolerance = 1e-4,
                              double corrupt_scale = 1.0);

}  // namespace kgind
