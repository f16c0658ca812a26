#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hdavca/features.hpp"
#include "hdavca/regression.hpp"

namespace hdavca {

// Equal lengths, >= 2 for the correlations and >= 1 for rmse. plcc and srcc
// throw kDegenerate on a constant argument ("constant input" / "constant ranks").
double plcc(std::span<const double> pred, std::span<const double> mos);
double srcc(std::span<const double> pred, std::span<const double> mos);
double krcc(std::span<const double> pred, std::span<const double> mos);  // tau-b
double rmse(std::span<const double> pred, std::span<const double> mos);

// 1-based ranks, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> v);

struct Metrics {
  double plcc = 0.0;
  double srcc = 0.0;
  double krcc = 0.0;
  double rmse = 0.0;
};

Metrics compute_metrics(std::span<const double> pred, std::span<const double> mos);

// Four-parameter logistic q(x) = b2 + (b1 - b2) / (1 + exp(-(x - b3) / |b4|))
// fitted by Levenberg-Marquardt; returns the mapped predictions.
std::vector<double> logistic_map(std::span<const double> pred, std::span<const double> mos);

struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::string> content_ids;
  std::vector<FeatureVector> x;
  std::vector<double> mos;

  std::size_t size() const { return x.size(); }
};

struct SplitParams {
  int n_splits = 100;
  double train_frac = 0.8;
  std::uint64_t seed = 1;
  bool group_by_content = true;
  bool logistic_fit = false;
  bool grid_search = false;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Split number `index` of the protocol. Grouped splits shuffle the content
// groups and take the group prefix whose size is closest to
// round(train_frac * n) while leaving both sides nonempty.
Split make_split(std::span<const std::string> content_ids, const SplitParams& params, int index);

struct SplitResult {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double c = 0.0;
  double gamma = 0.0;
  Metrics metrics;
};

struct EvalReport {
  std::vector<SplitResult> splits;
  Metrics mean;
  Metrics median;
  SplitParams protocol;
  SvrParams svr;
  FeatureMask mask;

  std::string to_json() const;
  std::string to_table() const;
};

// Called once per split with the rows that fitted the scaler and the model.
using FitObserver = std::function<void(int split, const std::vector<std::size_t>& fit_rows)>;

EvalReport cross_validate(const Dataset& data, const FeatureMask& mask, const SvrParams& svr,
                          const SplitParams& protocol, const FitObserver& observer = {});

struct AblationRow {
  std::string name;
  FeatureMask mask;
  EvalReport report;
};

std::vector<AblationRow> ablate(const Dataset& data, const SvrParams& svr, const SplitParams& protocol);
std::string ablation_to_json(const std::vector<AblationRow>& rows);
std::string ablation_to_table(const std::vector<AblationRow>& rows);

// HDAVCA_WORKERS if set to a positive integer, else the hardware count.
int worker_count();

// Runs body(i) for i in [0, n) across worker_count() threads. The first
// exception (by index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hdavca
