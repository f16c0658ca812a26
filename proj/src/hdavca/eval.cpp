#include "hdavca/eval.hpp"

#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "hdavca/error.hpp"
#include "hdavca/rng.hpp"

namespace hdavca {

namespace {

void require_pair(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kDimension, "length mismatch");
  Require(a.size() >= 2, ErrorCode::kInvalidArgument, "need at least two values");
}

double pearson(std::span<const double> a, std::span<const double> b, const char* constant_msg) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  Require(saa > 0 && sbb > 0, ErrorCode::kDegenerate, constant_msg);
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double plcc(std::span<const double> pred, std::span<const double> mos) {
  require_pair(pred, mos);
  return pearson(pred, mos, "constant input");
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> pred, std::span<const double> mos) {
  require_pair(pred, mos);
  const auto rp = average_ranks(pred);
  const auto rm = average_ranks(mos);
  return pearson(rp, rm, "constant ranks");
}

double krcc(std::span<const double> pred, std::span<const double> mos) {
  require_pair(pred, mos);
  long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = i + 1; j < pred.size(); ++j) {
      const double da = pred[i] - pred[j];
      const double db = mos[i] - mos[j];
      if (da == 0 && db == 0) continue;
      if (da == 0) {
        ++ties_a;
      } else if (db == 0) {
        ++ties_b;
      } else if ((da > 0) == (db > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n1 = static_cast<double>(concordant + discordant + ties_a);
  const double n2 = static_cast<double>(concordant + discordant + ties_b);
  Require(n1 > 0 && n2 > 0, ErrorCode::kDegenerate, "constant ranks");
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

double rmse(std::span<const double> pred, std::span<const double> mos) {
  Require(pred.size() == mos.size(), ErrorCode::kDimension, "length mismatch");
  Require(!pred.empty(), ErrorCode::kInvalidArgument, "need at least one value");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - mos[i]) * (pred[i] - mos[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

Metrics compute_metrics(std::span<const double> pred, std::span<const double> mos) {
  return {plcc(pred, mos), srcc(pred, mos), krcc(pred, mos), rmse(pred, mos)};
}

namespace {

struct LogisticFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::span<const double> x;
  std::span<const double> y;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(x.size()); }

  static double eval(const Eigen::VectorXd& b, double v) {
    const double s = std::max(std::abs(b[3]), 1e-12);
    return b[1] + (b[0] - b[1]) / (1.0 + std::exp(-(v - b[2]) / s));
  }

  int operator()(const Eigen::VectorXd& b, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < x.size(); ++i) f[static_cast<Eigen::Index>(i)] = eval(b, x[i]) - y[i];
    return 0;
  }
};

}  // namespace

std::vector<double> logistic_map(std::span<const double> pred, std::span<const double> mos) {
  require_pair(pred, mos);
  Eigen::VectorXd b(4);
  const auto [pmin, pmax] = std::minmax_element(pred.begin(), pred.end());
  const auto [mmin, mmax] = std::minmax_element(mos.begin(), mos.end());
  b << *mmax, *mmin, std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(pred.size()),
      std::max((*pmax - *pmin) / 4.0, 1e-6);
  LogisticFunctor functor{pred, mos};
  Eigen::NumericalDiff<LogisticFunctor> numeric(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LogisticFunctor>> lm(numeric);
  lm.parameters.maxfev = 2000;
  lm.minimize(b);
  std::vector<double> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = LogisticFunctor::eval(b, pred[i]);
  if (!std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); })) {
    return {pred.begin(), pred.end()};
  }
  return out;
}

Split make_split(std::span<const std::string> content_ids, const SplitParams& params, int index) {
  const std::size_t n = content_ids.size();
  Require(n >= 5, ErrorCode::kInvalidArgument, "too few items: cross-validation needs at least 5");
  Require(params.train_frac > 0 && params.train_frac < 1, ErrorCode::kInvalidArgument,
          "train fraction must lie in (0, 1)");
  const auto target = static_cast<std::size_t>(std::llround(params.train_frac * static_cast<double>(n)));
  auto rng = make_rng(params.seed, static_cast<std::uint64_t>(index));

  Split split;
  if (params.group_by_content) {
    std::vector<std::string> groups;
    std::map<std::string, std::size_t> group_of;
    std::vector<std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = group_of.emplace(content_ids[i], groups.size());
      if (inserted) {
        groups.push_back(content_ids[i]);
        members.emplace_back();
      }
      members[it->second].push_back(i);
    }
    Require(groups.size() >= 2, ErrorCode::kInvalidArgument,
            "empty test split: grouped splitting needs at least two content groups");
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_in_place(order, rng);
    std::size_t best_k = 1, acc = 0, best_gap = SIZE_MAX;
    for (std::size_t k = 1; k < order.size(); ++k) {
      acc += members[order[k - 1]].size();
      const std::size_t gap = acc > target ? acc - target : target - acc;
      if (gap < best_gap) {
        best_gap = gap;
        best_k = k;
      }
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& side = k < best_k ? split.train : split.test;
      side.insert(side.end(), members[order[k]].begin(), members[order[k]].end());
    }
  } else {
    Require(target >= 1 && target < n, ErrorCode::kInvalidArgument, "empty test split");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle_in_place(order, rng);
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(target), order.end());
  }
  Require(!split.test.empty(), ErrorCode::kInvalidArgument, "empty test split");
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

int worker_count() {
  if (const char* env = std::getenv("HDAVCA_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

EvalReport cross_validate(const Dataset& data, const FeatureMask& mask, const SvrParams& svr,
                          const SplitParams& protocol, const FitObserver& observer) {
  const std::size_t n = data.size();
  Require(data.mos.size() == n && data.content_ids.size() == n, ErrorCode::kDimension,
          "dataset columns have different lengths");
  Require(n >= 5, ErrorCode::kInvalidArgument, "too few items: cross-validation needs at least 5");
  Require(protocol.n_splits >= 1, ErrorCode::kInvalidArgument, "need at least one split");

  EvalReport report;
  report.protocol = protocol;
  report.svr = svr;
  report.mask = mask;
  report.splits.resize(static_cast<std::size_t>(protocol.n_splits));

  std::vector<Split> splits(report.splits.size());
  for (int s = 0; s < protocol.n_splits; ++s) splits[s] = make_split(data.content_ids, protocol, s);

  parallel_for(splits.size(), [&](std::size_t s) {
    const Split& split = splits[s];
    if (observer) observer(static_cast<int>(s), split.train);
    std::vector<FeatureVector> xtr;
    std::vector<double> ytr;
    for (auto i : split.train) {
      xtr.push_back(data.x[i]);
      ytr.push_back(data.mos[i]);
    }
    SvrParams params = svr;
    if (protocol.grid_search) {
      const ScaledSet scaled = scale_features(xtr, mask);
      const auto best = grid_search(scaled.x, ytr, svr, protocol.seed ^ (0x9e3779b97f4a7c15ull * (s + 1)));
      params.c = best.c;
      params.gamma = best.gamma;
    }
    const SvrModel model = svr_train(xtr, ytr, params, mask);
    std::vector<double> pred, truth;
    for (auto i : split.test) {
      pred.push_back(svr_predict(model, data.x[i]));
      truth.push_back(data.mos[i]);
    }
    if (protocol.logistic_fit) pred = logistic_map(pred, truth);
    SplitResult& r = report.splits[s];
    r.n_train = split.train.size();
    r.n_test = split.test.size();
    r.c = params.c;
    r.gamma = params.gamma;
    r.metrics = compute_metrics(pred, truth);
  });

  auto collect = [&](double Metrics::*field) {
    std::vector<double> v;
    for (const auto& r : report.splits) v.push_back(r.metrics.*field);
    return v;
  };
  for (double Metrics::*field : {&Metrics::plcc, &Metrics::srcc, &Metrics::krcc, &Metrics::rmse}) {
    const auto v = collect(field);
    report.mean.*field = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    report.median.*field = median_of(v);
  }
  return report;
}

namespace {

nlohmann::ordered_json metrics_json(const Metrics& m) {
  return {{"plcc", m.plcc}, {"srcc", m.srcc}, {"krcc", m.krcc}, {"rmse", m.rmse}};
}

nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n_splits"] = r.protocol.n_splits;
  j["train_frac"] = r.protocol.train_frac;
  j["seed"] = r.protocol.seed;
  j["group_by_content"] = r.protocol.group_by_content;
  j["logistic_fit"] = r.protocol.logistic_fit;
  j["grid_search"] = r.protocol.grid_search;
  j["feature_mask"] = r.mask.to_string();
  j["active_dims"] = r.mask.count();
  j["svr"] = {{"c", r.svr.c}, {"gamma", r.svr.gamma}, {"epsilon", r.svr.epsilon}};
  j["mean"] = metrics_json(r.mean);
  j["median"] = metrics_json(r.median);
  nlohmann::ordered_json splits = nlohmann::ordered_json::array();
  for (const auto& s : r.splits) {
    auto e = metrics_json(s.metrics);
    e["n_train"] = s.n_train;
    e["n_test"] = s.n_test;
    e["c"] = s.c;
    e["gamma"] = s.gamma;
    splits.push_back(std::move(e));
  }
  j["splits"] = std::move(splits);
  return j;
}

std::string fmt_row(const std::string& label, const Metrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s %8.4f %8.4f %8.4f %8.4f\n", label.c_str(), m.plcc, m.srcc, m.krcc,
                m.rmse);
  return buf;
}

const char* kTableHeader = "                         PLCC     SRCC     KRCC     RMSE\n";

}  // namespace

std::string EvalReport::to_json() const { return report_json(*this).dump(2) + "\n"; }

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << "splits=" << protocol.n_splits << " train_frac=" << protocol.train_frac << " seed=" << protocol.seed
      << " grouped=" << (protocol.group_by_content ? "yes" : "no") << " dims=" << mask.count() << "\n";
  out << kTableHeader << fmt_row("mean", mean) << fmt_row("median", median);
  return out.str();
}

std::vector<AblationRow> ablate(const Dataset& data, const SvrParams& svr, const SplitParams& protocol) {
  std::vector<AblationRow> rows;
  for (const auto& nm : ablation_masks()) {
    rows.push_back({nm.name, nm.mask, cross_validate(data, nm.mask, svr, protocol)});
  }
  return rows;
}

std::string ablation_to_json(const std::vector<AblationRow>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json e;
    e["name"] = r.name;
    e["report"] = report_json(r.report);
    j.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string ablation_to_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "mean over splits\n" << kTableHeader;
  for (const auto& r : rows) out << fmt_row(r.name, r.report.mean);
  out << "median over splits\n" << kTableHeader;
  for (const auto& r : rows) out << fmt_row(r.name, r.report.median);
  return out.str();
}

}  // namespace hdavca
