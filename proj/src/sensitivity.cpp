#include "scenebench/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "scenebench/detail/jsonfmt.hpp"
#include "scenebench/detail/jsonio.hpp"

namespace scenebench::sensitivity {

namespace {

constexpr double kBandwidthFloor = 1e-3;
const double kInvSqrt2Pi = 0.3989422804014326779399460599343818684;

double gauss(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

}  // namespace

VariationSpace parse_variation_space(const std::string& text) {
  const nlohmann::json doc = detail::parse_json_text(text);
  detail::expect_object(doc, "space");
  static const std::vector<std::string> known = {"continuous", "discrete"};
  detail::forbid_unknown_keys(doc, known, "space");

  VariationSpace space;
  if (doc.contains("continuous")) {
    const auto& dims = detail::expect_array(doc["continuous"],
                                            "space.continuous");
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const std::string path = "space.continuous[" + std::to_string(i) + "]";
      detail::expect_object(dims[i], path);
      static const std::vector<std::string> dk = {"name", "lower", "upper"};
      detail::forbid_unknown_keys(dims[i], dk, path);
      ContinuousDim dim;
      dim.name = detail::expect_string(
          detail::expect_key(dims[i], "name", path), path + ".name");
      dim.lower = detail::expect_number(
          detail::expect_key(dims[i], "lower", path), path + ".lower");
      dim.upper = detail::expect_number(
          detail::expect_key(dims[i], "upper", path), path + ".upper");
      if (!(dim.lower < dim.upper)) {
        throw scene_model::SchemaError(path + ": lower must be < upper");
      }
      space.continuous.push_back(std::move(dim));
    }
  }
  if (doc.contains("discrete")) {
    const auto& dims = detail::expect_array(doc["discrete"], "space.discrete");
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const std::string path = "space.discrete[" + std::to_string(i) + "]";
      detail::expect_object(dims[i], path);
      static const std::vector<std::string> dk = {"name", "categories"};
      detail::forbid_unknown_keys(dims[i], dk, path);
      DiscreteDim dim;
      dim.name = detail::expect_string(
          detail::expect_key(dims[i], "name", path), path + ".name");
      const auto& cats = detail::expect_array(
          detail::expect_key(dims[i], "categories", path),
          path + ".categories");
      if (cats.empty()) {
        throw scene_model::SchemaError(path +
                                       ".categories must not be empty");
      }
      for (std::size_t k = 0; k < cats.size(); ++k) {
        dim.categories.push_back(detail::expect_string(
            cats[k], path + ".categories[" + std::to_string(k) + "]"));
      }
      space.discrete.push_back(std::move(dim));
    }
  }
  return space;
}

std::string serialize_variation_space(const VariationSpace& space) {
  std::string out = "{\n  \"continuous\": [";
  for (std::size_t i = 0; i < space.continuous.size(); ++i) {
    const auto& d = space.continuous[i];
    out += (i ? ",\n    " : "\n    ");
    out += "{\"name\": \"" + detail::json_escape(d.name) +
           "\", \"lower\": " + detail::fmt_g6(d.lower) +
           ", \"upper\": " + detail::fmt_g6(d.upper) + "}";
  }
  out += space.continuous.empty() ? "],\n" : "\n  ],\n";
  out += "  \"discrete\": [";
  for (std::size_t i = 0; i < space.discrete.size(); ++i) {
    const auto& d = space.discrete[i];
    out += (i ? ",\n    " : "\n    ");
    out += "{\"name\": \"" + detail::json_escape(d.name) +
           "\", \"categories\": [";
    for (std::size_t k = 0; k < d.categories.size(); ++k) {
      if (k) out += ", ";
      out += "\"" + detail::json_escape(d.categories[k]) + "\"";
    }
    out += "]}";
  }
  out += space.discrete.empty() ? "]\n" : "\n  ]\n";
  out += "}\n";
  return out;
}

std::vector<double> normalize(const VariationSpace& space,
                              const std::vector<double>& raw) {
  if (raw.size() != space.continuous.size()) {
    throw std::invalid_argument("normalize: dimension mismatch");
  }
  std::vector<double> unit(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const auto& dim = space.continuous[j];
    if (raw[j] < dim.lower - 1e-12 || raw[j] > dim.upper + 1e-12) {
      throw std::invalid_argument("value " + detail::fmt_g6(raw[j]) +
                                  " out of bounds for dim \"" + dim.name +
                                  "\"");
    }
    unit[j] = (raw[j] - dim.lower) / (dim.upper - dim.lower);
  }
  return unit;
}

std::vector<double> denormalize(const VariationSpace& space,
                                const std::vector<double>& unit) {
  if (unit.size() != space.continuous.size()) {
    throw std::invalid_argument("denormalize: dimension mismatch");
  }
  std::vector<double> raw(unit.size());
  for (std::size_t j = 0; j < unit.size(); ++j) {
    const auto& dim = space.continuous[j];
    raw[j] = dim.lower + unit[j] * (dim.upper - dim.lower);
  }
  return raw;
}

double Kde::density(const std::vector<double>& x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double k = weights[i];
    for (std::size_t j = 0; j < bandwidth.size(); ++j) {
      k *= gauss((x[j] - points[i][j]) / bandwidth[j]) / bandwidth[j];
    }
    total += k;
  }
  return total;
}

Kde fit_kde(const std::vector<std::vector<double>>& points,
            const std::vector<double>& raw_weights) {
  if (points.size() < 2) {
    throw std::invalid_argument("KDE needs at least 2 points");
  }
  const std::size_t n = points.size();
  const std::size_t m = points.front().size();
  if (m == 0) throw std::invalid_argument("KDE needs at least 1 dimension");

  Kde kde;
  kde.points = points;
  if (raw_weights.empty()) {
    kde.weights.assign(n, 1.0 / n);
  } else {
    if (raw_weights.size() != n) {
      throw std::invalid_argument("KDE weights size mismatch");
    }
    kde.weights = normalize_weights(raw_weights);
  }

  // Effective count drives the Scott rate; equals n for equal weights.
  double sum_sq = 0.0;
  for (double w : kde.weights) sum_sq += w * w;
  const double n_eff = 1.0 / sum_sq;
  const double rate = std::pow(n_eff, -1.0 / (static_cast<double>(m) + 4.0));

  kde.bandwidth.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += kde.weights[i] * points[i][j];
    double var_num = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = points[i][j] - mean;
      var_num += kde.weights[i] * d * d;
    }
    const double denom = 1.0 - sum_sq;  // reliability correction (ddof = 1)
    double sigma = denom > 0.0 ? std::sqrt(var_num / denom) : 0.0;
    double h = rate * sigma;
    if (h < kBandwidthFloor) {
      h = kBandwidthFloor;
      kde.warnings.push_back("bandwidth floor applied on dimension " +
                             std::to_string(j) +
                             " (near-zero sample variance)");
    }
    kde.bandwidth[j] = h;
  }
  return kde;
}

Kde proposal_density(const Dataset& dataset) {
  if (dataset.space.continuous.empty()) {
    throw std::invalid_argument("proposal density needs continuous dims");
  }
  std::vector<std::vector<double>> points;
  points.reserve(dataset.records.size());
  for (const auto& record : dataset.records) {
    points.push_back(normalize(dataset.space, record.cont));
  }
  return fit_kde(points);
}

std::vector<double> importance_weights(
    const std::vector<std::vector<double>>& points, const DensityFn& prior,
    const DensityFn& proposal) {
  std::vector<double> weights;
  weights.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double q = proposal(points[i]);
    if (q <= 0.0) {
      throw std::invalid_argument("proposal density is zero at sample " +
                                  std::to_string(i));
    }
    weights.push_back(prior(points[i]) / q);
  }
  return weights;
}

std::vector<double> normalize_weights(const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0.0) {
    throw std::invalid_argument("weights must have a positive sum");
  }
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] / total;
  return out;
}

double ess(const std::vector<double>& weights) {
  if (weights.empty()) throw std::invalid_argument("ess of empty weights");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("weights must be non-negative");
    sum += w;
    sum_sq += w * w;
  }
  if (sum_sq == 0.0) throw std::invalid_argument("all weights are zero");
  return (sum * sum) / sum_sq;
}

namespace {

std::vector<std::vector<int>> enumerate_cells(const VariationSpace& space) {
  std::vector<std::vector<int>> cells = {{}};
  for (const auto& dim : space.discrete) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : cells) {
      for (int c = 0; c < static_cast<int>(dim.categories.size()); ++c) {
        auto cell = prefix;
        cell.push_back(c);
        next.push_back(std::move(cell));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

}  // namespace

PosteriorModel fit_posterior(const Dataset& dataset, int x_o) {
  std::vector<const Record*> subset;
  for (const auto& record : dataset.records) {
    if (record.outcome == x_o) subset.push_back(&record);
  }
  if (subset.empty()) {
    throw std::invalid_argument("no records with outcome " +
                                std::to_string(x_o));
  }
  if (subset.size() < 10) {
    throw std::invalid_argument("need at least 10 records with outcome " +
                                std::to_string(x_o) + ", have " +
                                std::to_string(subset.size()));
  }

  PosteriorModel model;
  model.space = dataset.space;
  model.n_conditioned = static_cast<int>(subset.size());

  const std::size_t m = dataset.space.continuous.size();
  std::vector<std::vector<double>> subset_points;
  subset_points.reserve(subset.size());
  for (const Record* r : subset) {
    subset_points.push_back(normalize(dataset.space, r->cont));
  }

  // Importance correction: uniform prior on the unit cube against the KDE
  // proposal fitted to every record.
  if (m > 0) {
    Kde proposal = proposal_density(dataset);
    for (const auto& w : proposal.warnings) model.warnings.push_back(w);
    model.record_weights =
        importance_weights(subset_points,
                           [](const std::vector<double>&) { return 1.0; },
                           [&proposal](const std::vector<double>& x) {
                             return proposal.density(x);
                           });
  } else {
    model.record_weights.assign(subset.size(), 1.0);
  }

  const std::vector<double> norm_w = normalize_weights(model.record_weights);
  const double n_sub = static_cast<double>(subset.size());

  const std::vector<std::vector<int>> cells = enumerate_cells(dataset.space);
  const double smoothing_total = n_sub + static_cast<double>(cells.size());

  Kde pooled;
  bool pooled_ready = false;
  auto pooled_kde = [&]() -> const Kde& {
    if (!pooled_ready) {
      pooled = fit_kde(subset_points, model.record_weights);
      pooled_ready = true;
    }
    return pooled;
  };

  for (const auto& cats : cells) {
    PosteriorModel::Cell cell;
    cell.categories = cats;

    std::vector<std::vector<double>> cell_points;
    std::vector<double> cell_weights;
    double weighted_count = 0.0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (subset[i]->disc == cats) {
        cell_points.push_back(subset_points[i]);
        cell_weights.push_back(model.record_weights[i]);
        weighted_count += norm_w[i] * n_sub;
      }
    }
    cell.probability = (weighted_count + 1.0) / smoothing_total;

    if (m > 0) {
      if (cell_points.size() >= 5) {
        cell.kde = fit_kde(cell_points, cell_weights);
        for (const auto& w : cell.kde.warnings) {
          model.warnings.push_back(w);
        }
      } else {
        cell.kde = pooled_kde();
      }
    }
    model.cells.push_back(std::move(cell));
  }

  if (pooled_ready) {
    for (const auto& w : pooled.warnings) model.warnings.push_back(w);
  }

  // Renormalize: smoothing leaves the sum at 1 already, but guard against
  // accumulation drift.
  double total_p = 0.0;
  for (const auto& cell : model.cells) total_p += cell.probability;
  for (auto& cell : model.cells) cell.probability /= total_p;
  return model;
}

std::vector<PosteriorSample> sample_posterior(const PosteriorModel& model,
                                              int n, Rng& rng) {
  if (model.cells.empty()) {
    throw std::invalid_argument("posterior model has no cells");
  }
  const std::size_t m = model.space.continuous.size();

  std::vector<PosteriorSample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double u = rng.uniform();
    std::size_t cell_idx = model.cells.size() - 1;
    double acc = 0.0;
    for (std::size_t c = 0; c < model.cells.size(); ++c) {
      acc += model.cells[c].probability;
      if (u <= acc) {
        cell_idx = c;
        break;
      }
    }
    const auto& cell = model.cells[cell_idx];

    PosteriorSample sample;
    sample.disc = cell.categories;
    if (m > 0) {
      const Kde& kde = cell.kde;
      double v = rng.uniform();
      std::size_t point_idx = kde.points.size() - 1;
      double wa = 0.0;
      for (std::size_t i = 0; i < kde.points.size(); ++i) {
        wa += kde.weights[i];
        if (v <= wa) {
          point_idx = i;
          break;
        }
      }
      sample.cont.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        double x = kde.points[point_idx][j] +
                   kde.bandwidth[j] * rng.normal(0.0, 1.0);
        while (x < 0.0 || x > 1.0) {
          if (x < 0.0) x = -x;
          if (x > 1.0) x = 2.0 - x;
        }
        sample.cont[j] = x;
      }
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<DimStats> posterior_stats(
    const std::vector<PosteriorSample>& samples, const VariationSpace& space) {
  if (samples.size() < 2) {
    throw std::invalid_argument("posterior stats need at least 2 samples");
  }
  std::vector<DimStats> stats;
  for (std::size_t j = 0; j < space.continuous.size(); ++j) {
    const auto& dim = space.continuous[j];
    std::vector<double> values;
    values.reserve(samples.size());
    for (const auto& s : samples) {
      values.push_back(dim.lower + s.cont[j] * (dim.upper - dim.lower));
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double mean =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) / sorted.size();
    DimStats d;
    d.name = dim.name;
    d.mean = mean;
    d.ci_lower = quantile(values, 0.025);
    d.ci_upper = quantile(values, 0.975);
    stats.push_back(std::move(d));
  }
  return stats;
}

PosteriorResult run_sensitivity(const Dataset& dataset, int x_o,
                                int n_samples, std::uint64_t seed) {
  if (n_samples < 2) {
    throw std::invalid_argument("need at least 2 posterior samples");
  }
  PosteriorModel model = fit_posterior(dataset, x_o);
  Rng rng(seed);
  PosteriorResult result;
  result.samples = sample_posterior(model, n_samples, rng);
  result.continuous = posterior_stats(result.samples, dataset.space);

  for (std::size_t d = 0; d < dataset.space.discrete.size(); ++d) {
    const auto& dim = dataset.space.discrete[d];
    std::map<std::string, double> marginal;
    for (const auto& cat : dim.categories) marginal[cat] = 0.0;
    for (const auto& cell : model.cells) {
      marginal[dim.categories[cell.categories[d]]] += cell.probability;
    }
    result.discrete_marginals[dim.name] = std::move(marginal);
  }

  result.ess = ess(model.record_weights);
  result.n_records = static_cast<int>(dataset.records.size());
  result.n_conditioned = model.n_conditioned;
  result.weight_min =
      *std::min_element(model.record_weights.begin(),
                        model.record_weights.end());
  result.weight_max =
      *std::max_element(model.record_weights.begin(),
                        model.record_weights.end());
  result.weight_mean = std::accumulate(model.record_weights.begin(),
                                       model.record_weights.end(), 0.0) /
                       model.record_weights.size();
  result.warnings = model.warnings;
  return result;
}

std::string serialize_posterior(const PosteriorResult& result) {
  std::string out = "{\n";
  out += "  \"n_records\": " + std::to_string(result.n_records) + ",\n";
  out += "  \"n_conditioned\": " + std::to_string(result.n_conditioned) +
         ",\n";
  out += "  \"n_samples\": " + std::to_string(result.samples.size()) + ",\n";
  out += "  \"ess\": " + detail::fmt_g6(result.ess) + ",\n";
  out += "  \"continuous\": [";
  for (std::size_t i = 0; i < result.continuous.size(); ++i) {
    const auto& d = result.continuous[i];
    out += (i ? ",\n    " : "\n    ");
    out += "{\"name\": \"" + detail::json_escape(d.name) +
           "\", \"mean\": " + detail::fmt_g6(d.mean) +
           ", \"ci_lower\": " + detail::fmt_g6(d.ci_lower) +
           ", \"ci_upper\": " + detail::fmt_g6(d.ci_upper) + "}";
  }
  out += result.continuous.empty() ? "],\n" : "\n  ],\n";
  out += "  \"discrete\": {";
  bool first = true;
  for (const auto& [name, marginal] : result.discrete_marginals) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "    \"" + detail::json_escape(name) + "\": {";
    bool inner_first = true;
    for (const auto& [cat, p] : marginal) {
      if (!inner_first) out += ", ";
      inner_first = false;
      out += "\"" + detail::json_escape(cat) + "\": " + detail::fmt_g6(p);
    }
    out += "}";
  }
  out += result.discrete_marginals.empty() ? "},\n" : "\n  },\n";
  out += "  \"weights\": {\"min\": " + detail::fmt_g6(result.weight_min) +
         ", \"max\": " + detail::fmt_g6(result.weight_max) +
         ", \"mean\": " + detail::fmt_g6(result.weight_mean) + "},\n";
  out += "  \"warnings\": [";
  for (std::size_t i = 0; i < result.warnings.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + detail::json_escape(result.warnings[i]) + "\"";
  }
  out += "]\n}\n";
  return out;
}

std::string format_histograms(const PosteriorResult& result,
                              const VariationSpace& space) {
  constexpr int kBins = 20;
  constexpr int kBarWidth = 40;
  std::string out;
  for (std::size_t j = 0; j < space.continuous.size(); ++j) {
    const auto& dim = space.continuous[j];
    std::vector<int> bins(kBins, 0);
    for (const auto& s : result.samples) {
      int b = static_cast<int>(s.cont[j] * kBins);
      if (b == kBins) b = kBins - 1;
      ++bins[b];
    }
    const int peak = *std::max_element(bins.begin(), bins.end());
    out += dim.name + "\n";
    for (int b = 0; b < kBins; ++b) {
      const double lo =
          dim.lower + (dim.upper - dim.lower) * b / static_cast<double>(kBins);
      const double hi = dim.lower + (dim.upper - dim.lower) * (b + 1) /
                                        static_cast<double>(kBins);
      const int width =
          peak > 0 ? (bins[b] * kBarWidth + peak - 1) / peak : 0;
      out += "  [" + detail::fmt_fixed(lo, 3) + ", " +
             detail::fmt_fixed(hi, 3) + ") " +
             std::string(static_cast<std::size_t>(bins[b] > 0 && width == 0
                                                      ? 1
                                                      : width),
                         '#') +
             " " + std::to_string(bins[b]) + "\n";
    }
  }
  for (const auto& [name, marginal] : result.discrete_marginals) {
    out += name + "\n";
    for (const auto& [cat, p] : marginal) {
      const int width = static_cast<int>(p * kBarWidth + 0.5);
      out += "  " + cat + " " +
             std::string(static_cast<std::size_t>(width), '#') + " " +
             detail::fmt_fixed(p, 3) + "\n";
    }
  }
  return out;
}

}  // namespace scenebench::sensitivity
