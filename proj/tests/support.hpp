#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dcovlc/harness.hpp"

namespace testing {

// Ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline std::shared_ptr<const dcovlc::AlphabetMetrics> qam4(int quad_order = 32) {
  dcovlc::AlphabetMetrics::Options o;
  o.quad_order = quad_order;
  return std::make_shared<const dcovlc::AlphabetMetrics>(dcovlc::make_qam(4), o);
}

inline dcovlc::Link reference_link(int half_subcarriers = 16) {
  const auto s = dcovlc::Scenario::reference();
  const auto gains = dcovlc::subcarrier_gains(s.geometry, s.front_end, half_subcarriers,
                                              s.bandwidth_hz, s.channel);
  return dcovlc::Link::from_channel(gains, qam4(), s.noise_psd, s.bandwidth_hz);
}

// Brute-force maximum of combine(r1, r2, p1 + p2) over a 2-D grid of the set
// {p >= 0, a1 p1 + a2 p2 <= opt_rhs, p1 + p2 <= el_rhs}. Each p1 column also
// tries the largest feasible p2 so boundary optima are not missed.
template <class F1, class F2, class Combine>
double grid_max(int points, F1 f1, F2 f2, double a1, double a2, double opt_rhs, double el_rhs,
                Combine combine) {
  const double max1 = std::min(el_rhs, opt_rhs / a1);
  const double max2 = std::min(el_rhs, opt_rhs / a2);
  std::vector<double> r2(static_cast<std::size_t>(points) + 1);
  for (int j = 0; j <= points; ++j) r2[j] = f2(max2 * j / points);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= points; ++i) {
    const double p1 = max1 * i / points;
    const double r1 = f1(p1);
    const double cap = std::max(0.0, std::min(el_rhs - p1, (opt_rhs - a1 * p1) / a2));
    for (int j = 0; j <= points; ++j) {
      const double p2 = max2 * j / points;
      if (p2 > cap) break;
      best = std::max(best, combine(r1, r2[j], p1 + p2));
    }
    best = std::max(best, combine(r1, f2(cap), p1 + cap));
  }
  return best;
}

// Parsed CSV body; metadata lines are kept separately.
struct Csv {
  std::vector<std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::out_of_range("no column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
  double num(std::size_t row, const std::string& name) const {
    return std::stod(rows.at(row).at(col(name)));
  }
  const std::string& str(std::size_t row, const std::string& name) const {
    return rows.at(row).at(col(name));
  }
};

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Csv parse_csv(const std::string& text) {
  Csv csv;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("#", 0) == 0) {
      csv.meta.push_back(line);
    } else if (csv.header.empty()) {
      csv.header = split(line);
    } else {
      csv.rows.push_back(split(line));
    }
  }
  return csv;
}

}  // namespace testing
