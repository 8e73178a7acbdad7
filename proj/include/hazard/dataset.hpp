#pragma once

#include <string>
#include <vector>

#include "hazard/types.hpp"

namespace hazard {

struct LoadedDataset {
  SurvivalDataset data;
  LoadMetadata meta;
};

// Schema-checked loaders. Rows with missing values (literal "NA" or empty
// fields) are dropped; counts end up in LoadMetadata. Categorical columns
// are encoded as documented in data/README.md.
LoadedDataset load_gbcsg2(const std::string& path);
LoadedDataset load_pbc(const std::string& path);

// name is "pbc" or "gbcsg2"; reads <data_dir>/<name>.csv.
LoadedDataset load_dataset(const std::string& name, const std::string& data_dir);

// Event-stratified holdout split: events and censored rows are shuffled
// separately and the rounded test fraction is taken from each group, so the
// censoring rate of train and test match to within one sample. Row index
// lists come back sorted.
TrainTestSplit split_train_test(const SurvivalDataset& d, double test_fraction,
                                std::uint64_t seed);

// Event-stratified k-fold partition: shuffled events and shuffled censored
// rows are dealt round-robin, so per-fold event counts differ by at most 1.
std::vector<Fold> make_folds(const SurvivalDataset& d, std::size_t k,
                             std::uint64_t seed);

// Feature-wise z-scoring with statistics taken from the training rows only.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // sample standard deviation, 1.0 where degenerate

  void fit(const SurvivalDataset& train);
  void apply(SurvivalDataset& d) const;
};

}  // namespace hazard
