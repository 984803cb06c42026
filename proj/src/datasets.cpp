#include "owaic/datasets.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "owaic/errors.hpp"
#include "text_util.hpp"

namespace owaic {

std::size_t HierDataset::total() const noexcept {
  std::size_t n = 0;
  for (const auto& g : y) n += g.size();
  return n;
}

HierDataset generate_hier(const HierParams& truth, std::span<const std::size_t> group_sizes,
                          RandomStream& rng) {
  if (!(truth.tau > 0.0) || !(truth.sigma > 0.0)) {
    throw DomainError("hierarchical generator needs tau > 0 and sigma > 0");
  }
  if (group_sizes.empty()) throw DomainError("hierarchical generator needs at least one group");
  HierDataset data;
  data.truth = truth;
  data.y.reserve(group_sizes.size());
  for (std::size_t n : group_sizes) {
    if (n == 0) throw DomainError("hierarchical groups must be nonempty");
    const double b = rng.normal(truth.mu, truth.tau);
    auto& group = data.y.emplace_back();
    group.reserve(n);
    for (std::size_t i = 0; i < n; ++i) group.push_back(rng.normal(b, truth.sigma));
  }
  return data;
}

HierDataset generate_hier(const HierParams& truth, std::size_t groups, std::size_t per_group,
                          RandomStream& rng) {
  std::vector<std::size_t> sizes(groups, per_group);
  return generate_hier(truth, sizes, rng);
}

SvDataset generate_sv(const SvParams& truth, std::size_t length, RandomStream& rng) {
  if (!(std::abs(truth.phi) < 1.0)) throw DomainError("stochastic volatility needs |phi| < 1");
  if (!(truth.sigma > 0.0)) throw DomainError("stochastic volatility needs sigma > 0");
  if (length < 2) throw DomainError("stochastic volatility series needs T >= 2");
  SvDataset data;
  data.truth = truth;
  data.y.reserve(length);
  double h = rng.normal(truth.mu, truth.sigma / std::sqrt(1.0 - truth.phi * truth.phi));
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) h = rng.normal(truth.mu + truth.phi * (h - truth.mu), truth.sigma);
    data.y.push_back(rng.normal(0.0, std::exp(h / 2.0)));
  }
  return data;
}

namespace {

void write_values(std::ostream& out, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    out << detail::format_double(values[i]);
  }
  out << '\n';
}

std::vector<double> read_values(std::string_view line, std::size_t lineno) {
  std::vector<double> values;
  for (auto tok : detail::split(line, ',')) {
    auto v = detail::parse_double(tok);
    if (!v || !std::isfinite(*v)) {
      throw FormatError("bad dataset value '" + std::string(tok) + "'", lineno);
    }
    values.push_back(*v);
  }
  return values;
}

double header_double(const detail::Header& h, std::string_view key, std::size_t line) {
  auto v = detail::parse_double(h.at(key, line));
  if (!v) throw FormatError("header field " + std::string(key) + " is not a number", line);
  return *v;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& dataset) {
  if (const auto* hier = std::get_if<HierDataset>(&dataset)) {
    out << "waic-dataset v1 family=hier J=" << hier->groups()
        << " mu=" << detail::format_double(hier->truth.mu)
        << " tau=" << detail::format_double(hier->truth.tau)
        << " sigma=" << detail::format_double(hier->truth.sigma) << '\n';
    for (const auto& group : hier->y) write_values(out, group);
  } else {
    const auto& sv = std::get<SvDataset>(dataset);
    out << "waic-dataset v1 family=sv T=" << sv.length()
        << " phi=" << detail::format_double(sv.truth.phi)
        << " sigma=" << detail::format_double(sv.truth.sigma)
        << " mu=" << detail::format_double(sv.truth.mu) << '\n';
    write_values(out, sv.y);
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset file is empty");
  const auto header = detail::parse_header(line, 1);
  if (header.magic != "waic-dataset") throw FormatError("not a waic-dataset file", 1);
  if (header.version != "v1") throw FormatError("unsupported dataset version " + header.version, 1);
  const std::string& family = header.at("family", 1);

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    rows.push_back(read_values(line, lineno));
  }

  if (family == "hier") {
    HierDataset data;
    data.truth = {header_double(header, "mu", 1), header_double(header, "tau", 1),
                  header_double(header, "sigma", 1)};
    auto j = detail::parse_integer(header.at("J", 1));
    if (!j || *j != static_cast<long long>(rows.size())) {
      throw FormatError("header J does not match the number of group lines", 1);
    }
    data.y = std::move(rows);
    return data;
  }
  if (family == "sv") {
    SvDataset data;
    data.truth = {header_double(header, "phi", 1), header_double(header, "sigma", 1),
                  header_double(header, "mu", 1)};
    if (rows.size() != 1) throw FormatError("sv dataset needs exactly one value line");
    auto t = detail::parse_integer(header.at("T", 1));
    if (!t || *t != static_cast<long long>(rows[0].size())) {
      throw FormatError("header T does not match the number of values", 2);
    }
    data.y = std::move(rows[0]);
    return data;
  }
  throw FormatError("unknown dataset family '" + family + "'", 1);
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset file " + path.string());
  return read_dataset(in);
}

}  // namespace owaic
