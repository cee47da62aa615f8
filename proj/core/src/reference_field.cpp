#include "pinto/reference_field.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pinto {

long ReferenceField::node_count() const {
  long n = 1;
  for (const auto& a : axes) n *= static_cast<long>(a.size());
  return n;
}

long ReferenceField::node_index(const std::vector<int>& idx) const {
  if (static_cast<int>(idx.size()) != axis_count()) throw std::runtime_error("node_index: rank mismatch");
  long flat = 0;
  for (size_t d = 0; d < axes.size(); ++d) {
    if (idx[d] < 0 || idx[d] >= static_cast<int>(axes[d].size())) throw std::runtime_error("node_index: out of range");
    flat = flat * static_cast<long>(axes[d].size()) + idx[d];
  }
  return flat;
}

std::vector<double> ReferenceField::node_coords(long flat) const {
  std::vector<double> x(axes.size());
  for (int d = axis_count() - 1; d >= 0; --d) {
    long n = static_cast<long>(axes[d].size());
    x[d] = axes[d][flat % n];
    flat /= n;
  }
  return x;
}

namespace {

// cell index i with axis[i] <= v, axis[i+1] the neighbor; clamped to [0, n-2]
int bracket(const std::vector<double>& axis, double v, double* frac) {
  int n = static_cast<int>(axis.size());
  if (n == 1) { *frac = 0.0; return 0; }
  int lo = 0, hi = n - 1;
  if (v <= axis.front()) { *frac = 0.0; return 0; }
  if (v >= axis.back()) { *frac = 1.0; return n - 2; }
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    if (axis[mid] <= v) lo = mid; else hi = mid;
  }
  *frac = (v - axis[lo]) / (axis[lo + 1] - axis[lo]);
  return lo;
}

}  // namespace

double ReferenceField::sample(const std::vector<double>& x, int field) const {
  if (static_cast<int>(x.size()) != axis_count()) throw std::runtime_error("sample: rank mismatch");
  int d = axis_count();
  std::vector<int> base(d);
  std::vector<double> frac(d);
  for (int a = 0; a < d; ++a) base[a] = bracket(axes[a], x[a], &frac[a]);
  double acc = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    std::vector<int> idx(d);
    for (int a = 0; a < d; ++a) {
      bool hi = corner & (1 << a);
      if (static_cast<int>(axes[a].size()) == 1) hi = false;
      idx[a] = base[a] + (hi ? 1 : 0);
      w *= hi ? frac[a] : 1.0 - frac[a];
    }
    if (w != 0.0) acc += w * values(node_index(idx), field);
  }
  return acc;
}

void ReferenceField::validate() const {
  if (axes.size() != axis_names.size()) throw std::runtime_error("reference field: axis name/coord mismatch");
  if (values.cols() != field_count()) throw std::runtime_error("reference field: field column mismatch");
  if (values.rows() != node_count()) throw std::runtime_error("reference field: node row mismatch");
  for (const auto& a : axes) {
    if (a.empty()) throw std::runtime_error("reference field: empty axis");
    for (size_t i = 0; i + 1 < a.size(); ++i)
      if (!(a[i] < a[i + 1])) throw std::runtime_error("reference field: axis not strictly increasing");
  }
  if (!values.allFinite()) throw std::runtime_error("reference field: non-finite values");
}

namespace {

bool is_axis_name(const std::string& s) { return s == "x" || s == "y" || s == "t"; }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

ReferenceField read_reference_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty reference csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ReferenceField f;
  f.provenance = "imported-csv";
  auto header = split_csv_line(line);
  size_t na = 0;
  while (na < header.size() && is_axis_name(header[na])) ++na;
  if (na == 0 || na == header.size()) throw std::runtime_error("reference csv header needs axis columns then field columns");
  f.axis_names.assign(header.begin(), header.begin() + na);
  f.field_names.assign(header.begin() + na, header.end());

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw std::runtime_error("reference csv row width mismatch");
    std::vector<double> row(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) row[i] = std::stod(cells[i]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("reference csv has no data rows");

  // rebuild axes inner-to-outer: axis a repeats with the stride of the axes inside it
  f.axes.resize(na);
  for (int a = static_cast<int>(na) - 1; a >= 0; --a) {
    long stride = 1;
    for (size_t b = a + 1; b < na; ++b) stride *= static_cast<long>(f.axes[b].size());
    std::vector<double> vals;
    for (size_t r = 0; r < rows.size(); r += stride) {
      double v = rows[r][a];
      if (vals.empty() || v != vals.back()) {
        if (!vals.empty() && v < vals.back()) break;  // wrapped to next outer block
        vals.push_back(v);
      }
    }
    f.axes[a] = vals;
  }
  if (f.node_count() != static_cast<long>(rows.size()))
    throw std::runtime_error("reference csv rows do not form a tensor grid");

  f.values.resize(static_cast<long>(rows.size()), static_cast<int>(f.field_names.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    auto x = f.node_coords(static_cast<long>(r));
    for (size_t a = 0; a < na; ++a)
      if (rows[r][a] != x[a]) throw std::runtime_error("reference csv rows not in grid order");
    for (int c = 0; c < f.values.cols(); ++c) f.values(static_cast<long>(r), c) = rows[r][na + c];
  }
  f.validate();
  return f;
}

void write_reference_csv(const ReferenceField& f, const std::string& path) {
  f.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write reference csv: " + path);
  for (size_t a = 0; a < f.axis_names.size(); ++a) out << (a ? "," : "") << f.axis_names[a];
  for (const auto& n : f.field_names) out << "," << n;
  out << "\n";
  char buf[64];
  long nn = f.node_count();
  for (long r = 0; r < nn; ++r) {
    auto x = f.node_coords(r);
    for (size_t a = 0; a < x.size(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", x[a]);
      out << (a ? "," : "") << buf;
    }
    for (int c = 0; c < f.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", f.values(r, c));
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pinto
