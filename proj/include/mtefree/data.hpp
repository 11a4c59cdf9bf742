#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mtefree {

// Observations (Y, D, X) with an explicit continuous/discrete covariate
// split. Immutable after construction; safe to share across threads.
struct Sample {
  Eigen::VectorXd y;                     // outcome
  Eigen::VectorXi d;                     // treatment indicator, 0/1
  Eigen::MatrixXd x_cont;                // n x dim_cont
  Eigen::MatrixXi x_disc;                // n x dim_disc
  std::vector<std::string> cont_names;
  std::vector<std::string> disc_names;

  Eigen::Index size() const { return y.size(); }
  int dim_cont() const { return static_cast<int>(x_cont.cols()); }
  int dim_disc() const { return static_cast<int>(x_disc.cols()); }
  int dim_x() const { return dim_cont() + dim_disc(); }

  // Full covariate vector of row i: continuous dims first, then discrete
  // codes as doubles. This ordering is used everywhere (betas, tables).
  Eigen::VectorXd covariate_row(Eigen::Index i) const;
  std::vector<std::string> covariate_names() const;

  // Column means of the full covariate vector over the given rows.
  Eigen::VectorXd covariate_means(const std::vector<int>& rows) const;
  Eigen::VectorXd covariate_means() const;

  // Row subset in the given order (used by the bootstrap).
  Sample subset(const std::vector<int>& rows) const;

  // Checks container shapes, d in {0,1}, and finiteness of y / x_cont.
  // Throws ConfigError on violation.
  void validate() const;

  // Estimation entry points additionally need both arms nonempty.
  void require_both_arms(const std::string& module) const;

  int count_arm(int arm) const;
};

// Rows sharing one value combination of the discrete covariates.
struct Cell {
  Eigen::VectorXi key;
  std::vector<int> rows;
};

// Partition of {0..n-1} keyed by distinct x_disc rows, keys sorted
// lexicographically. dim_disc == 0 yields a single cell with all rows.
std::vector<Cell> split_cells(const Sample& s);

// Column mapping for CSV ingestion.
struct ColumnConfig {
  std::string outcome;
  std::string treatment;
  std::vector<std::string> continuous;
  std::vector<std::string> discrete;
  // Optional raw labels for the treatment column; when empty the column
  // must contain literal 0/1 values.
  std::string treated_label;
  std::string control_label;
};

struct LoadReport {
  int rows_read = 0;
  int rows_dropped = 0;
  // Distinct raw values per discrete column, index = dense code.
  std::vector<std::vector<std::string>> discrete_levels;
};

// Reads a CSV with a header row. Rows with a missing value in any mapped
// column are dropped (listwise deletion) and counted in the report.
// Discrete covariates are recoded to dense integer codes 0..K-1 in sorted
// order of their raw values.
Sample load_csv(const std::string& path, const ColumnConfig& config,
                LoadReport* report = nullptr);

}  // namespace mtefree
