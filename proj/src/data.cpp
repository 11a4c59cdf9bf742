#include "mtefree/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mtefree/common.hpp"

namespace mtefree {

Eigen::VectorXd Sample::covariate_row(Eigen::Index i) const {
  Eigen::VectorXd x(dim_x());
  for (int c = 0; c < dim_cont(); ++c) x[c] = x_cont(i, c);
  for (int c = 0; c < dim_disc(); ++c) x[dim_cont() + c] = x_disc(i, c);
  return x;
}

std::vector<std::string> Sample::covariate_names() const {
  std::vector<std::string> names = cont_names;
  names.insert(names.end(), disc_names.begin(), disc_names.end());
  return names;
}

Eigen::VectorXd Sample::covariate_means(const std::vector<int>& rows) const {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim_x());
  if (rows.empty()) return mean;
  for (int i : rows) mean += covariate_row(i);
  return mean / static_cast<double>(rows.size());
}

Eigen::VectorXd Sample::covariate_means() const {
  std::vector<int> all(size());
  for (Eigen::Index i = 0; i < size(); ++i) all[i] = static_cast<int>(i);
  return covariate_means(all);
}

Sample Sample::subset(const std::vector<int>& rows) const {
  Sample out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.y.resize(m);
  out.d.resize(m);
  out.x_cont.resize(m, x_cont.cols());
  out.x_disc.resize(m, x_disc.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    int i = rows[r];
    out.y[r] = y[i];
    out.d[r] = d[i];
    out.x_cont.row(r) = x_cont.row(i);
    out.x_disc.row(r) = x_disc.row(i);
  }
  out.cont_names = cont_names;
  out.disc_names = disc_names;
  return out;
}

void Sample::validate() const {
  const Eigen::Index n = y.size();
  if (n < 1) throw ConfigError("data", "sample is empty");
  if (d.size() != n || x_cont.rows() != n || x_disc.rows() != n)
    throw ConfigError("data", "row count mismatch across containers");
  if (static_cast<Eigen::Index>(cont_names.size()) != x_cont.cols() ||
      static_cast<Eigen::Index>(disc_names.size()) != x_disc.cols())
    throw ConfigError("data", "covariate name count mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d[i] != 0 && d[i] != 1)
      throw ConfigError("data", "non-binary treatment at row " + std::to_string(i));
    if (!std::isfinite(y[i]))
      throw ConfigError("data", "non-finite outcome at row " + std::to_string(i));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < x_cont.cols(); ++c)
      if (!std::isfinite(x_cont(i, c)))
        throw ConfigError("data", "non-finite continuous covariate at row " +
                                      std::to_string(i));
}

void Sample::require_both_arms(const std::string& module) const {
  if (count_arm(1) == 0 || count_arm(0) == 0)
    throw EstimationError(module, "both treatment arms must be nonempty");
}

int Sample::count_arm(int arm) const {
  int c = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) c += (d[i] == arm);
  return c;
}

std::vector<Cell> split_cells(const Sample& s) {
  std::vector<Cell> cells;
  if (s.dim_disc() == 0) {
    Cell all;
    all.key.resize(0);
    all.rows.resize(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) all.rows[i] = static_cast<int>(i);
    cells.push_back(std::move(all));
    return cells;
  }

  auto cmp = [](const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (a[k] != b[k]) return a[k] < b[k];
    }
    return false;
  };
  std::map<Eigen::VectorXi, std::vector<int>, decltype(cmp)> groups(cmp);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    Eigen::VectorXi key = s.x_disc.row(i).transpose();
    groups[key].push_back(static_cast<int>(i));
  }
  cells.reserve(groups.size());
  for (auto& [key, rows] : groups) cells.push_back(Cell{key, std::move(rows)});
  return cells;
}

namespace {

// Minimal CSV field splitter: handles quoted fields with doubled quotes
// and trailing \r. No embedded newlines.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool is_missing(const std::string& raw) {
  if (raw.empty()) return true;
  std::string low;
  low.reserve(raw.size());
  for (char c : raw) low.push_back(static_cast<char>(std::tolower(c)));
  return low == "na" || low == "nan" || low == ".";
}

bool parse_double(const std::string& raw, double* out) {
  try {
    size_t pos = 0;
    double v = std::stod(raw, &pos);
    while (pos < raw.size() && std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
    if (pos != raw.size()) return false;
    *out = v;
    return true;
  } catch (...) {
    return false;
  }
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<int>(c);
  throw ConfigError("data", "column not found: " + name);
}

}  // namespace

Sample load_csv(const std::string& path, const ColumnConfig& config,
                LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw ConfigError("data", "cannot open file: " + path);
  if (config.outcome.empty() || config.treatment.empty())
    throw ConfigError("data", "outcome and treatment columns must be named");

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("data", "empty file: " + path);
  const std::vector<std::string> header = split_csv_line(line);

  const int y_col = find_column(header, config.outcome);
  const int d_col = find_column(header, config.treatment);
  std::vector<int> cont_cols, disc_cols;
  for (const auto& name : config.continuous) cont_cols.push_back(find_column(header, name));
  for (const auto& name : config.discrete) disc_cols.push_back(find_column(header, name));

  std::vector<double> ys;
  std::vector<int> ds;
  std::vector<std::vector<double>> cont(cont_cols.size());
  std::vector<std::vector<std::string>> disc_raw(disc_cols.size());
  int rows_read = 0, rows_dropped = 0;

  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    ++rows_read;
    const std::vector<std::string> fields = split_csv_line(line);
    auto field = [&](int c) -> const std::string& {
      static const std::string empty;
      return c < static_cast<int>(fields.size()) ? fields[c] : empty;
    };

    bool missing = is_missing(field(y_col)) || is_missing(field(d_col));
    for (int c : cont_cols) missing = missing || is_missing(field(c));
    for (int c : disc_cols) missing = missing || is_missing(field(c));

    double yv = 0.0;
    std::vector<double> xv(cont_cols.size());
    if (!missing) {
      if (!parse_double(field(y_col), &yv) || !std::isfinite(yv)) missing = true;
      for (size_t k = 0; k < cont_cols.size() && !missing; ++k) {
        if (!parse_double(field(cont_cols[k]), &xv[k]) || !std::isfinite(xv[k]))
          missing = true;
      }
    }
    if (missing) {
      ++rows_dropped;
      continue;
    }

    const std::string& draw = field(d_col);
    int dv;
    if (!config.treated_label.empty() || !config.control_label.empty()) {
      if (draw == config.treated_label) {
        dv = 1;
      } else if (draw == config.control_label) {
        dv = 0;
      } else {
        throw ConfigError("data", "non-binary treatment: unexpected value '" +
                                      draw + "' in column " + config.treatment);
      }
    } else {
      double dnum;
      if (!parse_double(draw, &dnum) || (dnum != 0.0 && dnum != 1.0))
        throw ConfigError("data", "non-binary treatment: unexpected value '" +
                                      draw + "' in column " + config.treatment);
      dv = static_cast<int>(dnum);
    }

    ys.push_back(yv);
    ds.push_back(dv);
    for (size_t k = 0; k < cont_cols.size(); ++k) cont[k].push_back(xv[k]);
    for (size_t k = 0; k < disc_cols.size(); ++k) disc_raw[k].push_back(field(disc_cols[k]));
  }

  if (ys.empty())
    throw ConfigError("data", "no usable rows after dropping " +
                                  std::to_string(rows_dropped) + " of " +
                                  std::to_string(rows_read));

  // Dense integer recode of discrete columns; numeric values sort
  // numerically, anything else lexicographically.
  const auto n = static_cast<Eigen::Index>(ys.size());
  Sample s;
  s.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  s.d.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.d[i] = ds[i];
  s.x_cont.resize(n, static_cast<Eigen::Index>(cont_cols.size()));
  for (size_t k = 0; k < cont_cols.size(); ++k)
    for (Eigen::Index i = 0; i < n; ++i) s.x_cont(i, k) = cont[k][i];

  s.x_disc.resize(n, static_cast<Eigen::Index>(disc_cols.size()));
  std::vector<std::vector<std::string>> levels(disc_cols.size());
  for (size_t k = 0; k < disc_cols.size(); ++k) {
    std::vector<std::string> distinct = disc_raw[k];
    std::sort(distinct.begin(), distinct.end(),
              [](const std::string& a, const std::string& b) {
                double av, bv;
                if (parse_double(a, &av) && parse_double(b, &bv)) {
                  if (av != bv) return av < bv;
                  return a < b;
                }
                return a < b;
              });
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    levels[k] = distinct;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto it = std::lower_bound(distinct.begin(), distinct.end(), disc_raw[k][i],
                                 [](const std::string& a, const std::string& b) {
                                   double av, bv;
                                   if (parse_double(a, &av) && parse_double(b, &bv)) {
                                     if (av != bv) return av < bv;
                                     return a < b;
                                   }
                                   return a < b;
                                 });
      s.x_disc(i, k) = static_cast<int>(it - distinct.begin());
    }
  }

  s.cont_names = config.continuous;
  s.disc_names = config.discrete;
  s.validate();

  if (report) {
    report->rows_read = rows_read;
    report->rows_dropped = rows_dropped;
    report->discrete_levels = std::move(levels);
  }
  return s;
}

}  // namespace mtefree
