#pragma once

#include "smoothing.hpp"

namespace rumboost {

/// On-disk model: the trained ensembles plus any spline overrides from
/// smoothing. Versioned JSON with trees as preorder node lists carrying raw
/// thresholds; reload is bit-exact, so identical seeds give byte-identical
/// files and identical predictions.
struct ModelFile {
  RUMBoostModel model;
  std::vector<SplineOverride> overrides;
  int spline_df = 0;
};

void save_model(const ModelFile& mf, const std::string& path);
ModelFile load_model(const std::string& path);

std::string serialize_model(const ModelFile& mf);
ModelFile parse_model(const std::string& text);

}  // namespace rumboost
