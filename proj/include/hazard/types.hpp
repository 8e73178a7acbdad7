#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace hazard {

// A right-censored sample: event == 1 means the event was observed at
// `time`, event == 0 means follow-up ended at `time` without the event.
struct SurvivalDataset {
  std::string name;
  Eigen::MatrixXd x;                   // n rows, one column per feature
  std::vector<double> time;            // observed time, > 0
  std::vector<std::uint8_t> event;     // 1 = event, 0 = censored
  std::vector<std::string> feature_names;

  std::size_t n() const { return time.size(); }
  std::size_t p() const { return static_cast<std::size_t>(x.cols()); }

  std::size_t n_events() const {
    std::size_t k = 0;
    for (auto e : event) k += e;
    return k;
  }
  std::size_t n_censored() const { return n() - n_events(); }

  SurvivalDataset subset(const std::vector<std::size_t>& rows) const {
    SurvivalDataset out;
    out.name = name;
    out.feature_names = feature_names;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.time.reserve(rows.size());
    out.event.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.x.row(static_cast<Eigen::Index>(i)) =
          x.row(static_cast<Eigen::Index>(rows[i]));
      out.time.push_back(time[rows[i]]);
      out.event.push_back(event[rows[i]]);
    }
    return out;
  }

  // Remove one feature column by name; returns false if absent.
  bool drop_feature(const std::string& fname) {
    std::ptrdiff_t col = -1;
    for (std::size_t j = 0; j < feature_names.size(); ++j)
      if (feature_names[j] == fname) { col = static_cast<std::ptrdiff_t>(j); break; }
    if (col < 0) return false;
    const Eigen::Index pnew = x.cols() - 1;
    Eigen::MatrixXd xnew(x.rows(), pnew);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (j != col) xnew.col(k++) = x.col(j);
    x = std::move(xnew);
    feature_names.erase(feature_names.begin() + col);
    return true;
  }
};

// Counts recorded while loading a CSV, before and after complete-case
// filtering. Kept so reports can state exactly what was analyzed.
struct LoadMetadata {
  std::size_t n_raw = 0;        // data rows in the file
  std::size_t n_dropped = 0;    // rows removed for missing values
  std::size_t n_used = 0;       // rows in the returned dataset
  std::size_t n_events = 0;
  std::size_t n_censored = 0;
  std::size_t n_features = 0;
};

struct TrainTestSplit {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

// One cross-validation fold: indices into the *training* dataset.
struct Fold {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> valid_rows;
};

}  // namespace hazard
