#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "scenebench/rng.hpp"

namespace scenebench::sensitivity {

struct ContinuousDim {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

struct DiscreteDim {
  std::string name;
  std::vector<std::string> categories;
};

struct VariationSpace {
  std::vector<ContinuousDim> continuous;
  std::vector<DiscreteDim> discrete;
};

VariationSpace parse_variation_space(const std::string& text);
std::string serialize_variation_space(const VariationSpace& space);

struct Record {
  std::vector<double> cont;  // raw values, one per continuous dim
  std::vector<int> disc;     // category index, one per discrete dim
  int outcome = 0;           // binary
};

struct Dataset {
  VariationSpace space;
  std::vector<Record> records;
};

// Affine map of the continuous dims onto [0,1]; discrete indices pass
// through. Out-of-bounds values throw.
std::vector<double> normalize(const VariationSpace& space,
                              const std::vector<double>& raw);
std::vector<double> denormalize(const VariationSpace& space,
                                const std::vector<double>& unit);

// Product-kernel Gaussian KDE with per-dimension Scott's-rule bandwidths.
struct Kde {
  std::vector<std::vector<double>> points;  // n x m
  std::vector<double> weights;              // normalized, sum 1
  std::vector<double> bandwidth;            // per dimension
  std::vector<std::string> warnings;

  double density(const std::vector<double>& x) const;
};

Kde fit_kde(const std::vector<std::vector<double>>& points,
            const std::vector<double>& raw_weights = {});

// Unweighted KDE over the normalized continuous coordinates of every record.
Kde proposal_density(const Dataset& dataset);

using DensityFn = std::function<double(const std::vector<double>&)>;

// Raw importance ratios prior/proposal; a zero proposal density throws,
// naming the offending sample index.
std::vector<double> importance_weights(
    const std::vector<std::vector<double>>& points, const DensityFn& prior,
    const DensityFn& proposal);

std::vector<double> normalize_weights(const std::vector<double>& weights);

// Effective sample size (sum w)^2 / sum w^2; scale-invariant, so raw and
// normalized weights give the same value.
double ess(const std::vector<double>& weights);

struct PosteriorModel {
  VariationSpace space;
  struct Cell {
    std::vector<int> categories;  // one index per discrete dim
    double probability = 0.0;
    Kde kde;  // over normalized continuous dims
  };
  std::vector<Cell> cells;
  std::vector<double> record_weights;  // raw, one per conditioned record
  int n_conditioned = 0;
  std::vector<std::string> warnings;
};

PosteriorModel fit_posterior(const Dataset& dataset, int x_o);

struct PosteriorSample {
  std::vector<double> cont;  // normalized
  std::vector<int> disc;
};

std::vector<PosteriorSample> sample_posterior(const PosteriorModel& model,
                                              int n, Rng& rng);

struct DimStats {
  std::string name;
  double mean = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

// Type-7 quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

// Means and 95% credible intervals per continuous dim, reported in raw
// (denormalized) units.
std::vector<DimStats> posterior_stats(
    const std::vector<PosteriorSample>& samples, const VariationSpace& space);

struct PosteriorResult {
  std::vector<PosteriorSample> samples;
  std::vector<DimStats> continuous;
  std::map<std::string, std::map<std::string, double>> discrete_marginals;
  double ess = 0.0;
  int n_records = 0;
  int n_conditioned = 0;
  double weight_min = 0.0;
  double weight_max = 0.0;
  double weight_mean = 0.0;
  std::vector<std::string> warnings;
};

PosteriorResult run_sensitivity(const Dataset& dataset, int x_o,
                                int n_samples, std::uint64_t seed);

std::string serialize_posterior(const PosteriorResult& result);
std::string format_histograms(const PosteriorResult& result,
                              const VariationSpace& space);

}  // namespace scenebench::sensitivity
