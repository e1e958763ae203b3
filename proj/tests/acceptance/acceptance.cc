// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "swpipe/classify/cross_validation.h"
#include "swpipe/classify/folds.h"
#include "swpipe/classify/metrics.h"
#include "swpipe/classify/mlp.h"
#include "swpipe/classify/model.h"
#include "swpipe/classify/random_forest.h"
#include "swpipe/encoders.h"
#include "swpipe/ensemble.h"
#include "swpipe/error.h"
#include "swpipe/indicators.h"
#include "swpipe/io.h"
#include "swpipe/pipeline/pipeline.h"
#include "swpipe/pipeline/synthetic.h"
#include "swpipe/preprocess.h"
#include "swpipe/random.h"

namespace fs = std::filesystem;
using namespace swpipe;
using Rational = boost::multiprecision::cpp_rational;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// --- 1 -------------------------------------------------------------------------

// Enumerates every candidate start k * 27 s over the whole admissible range
// and keeps those inside the clip.
std::vector<std::pair<double, double>> brute_force_windows(double d) {
  std::vector<std::pair<double, double>> w;
  for (int k = 0; k <= 40; ++k) {
    const double s = 27.0 * k;
    if (s < d) w.emplace_back(s, std::min(s + 30.0, d));
  }
  if (w.size() > 1 && w.back().second - w.back().first < 5.0) w.pop_back();
  return w;
}

Outcome segmentation_oracle() {
  Rng rng(101);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    double d = 600.0 * (1.0 - rng.uniform());  // (0, 600]
    if (i < 3) d = std::array{20.0, 65.0, 58.0}[i];
    const auto plan = preprocess::plan_segments(d);
    const auto expect = brute_force_windows(d);
    bool same = plan.windows.size() == expect.size();
    for (std::size_t j = 0; same && j < expect.size(); ++j) {
      same = plan.windows[j].start == expect[j].first && plan.windows[j].end == expect[j].second;
    }
    mismatches += !same;
  }
  return {mismatches == 0, fmt::format("1000 durations, {} mismatches", mismatches)};
}

// --- 2 -------------------------------------------------------------------------

Outcome pooling_equivalence() {
  Rng rng(202);
  double worst = 0.0;
  std::size_t decision_flips = 0;
  std::size_t bitwise_diffs = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.index(20);
    const std::size_t dim = 1 + rng.index(64);
    std::vector<encoders::Embedding> segs(n);
    for (auto& s : segs) {
      s.source = {"P", corpus::TaskKind::kER, "enc", encoders::Level::kSegment};
      s.vector.resize(dim);
      for (auto& v : s.vector) v = static_cast<float>(rng.normal() * 3.0);
    }
    const auto pooled = encoders::pool_speaker(segs);
    for (std::size_t c = 0; c < dim; ++c) {
      long double sum = 0;
      for (const auto& s : segs) sum += s.vector[c];
      const double oracle = static_cast<double>(sum / n);
      const double err = std::abs(pooled.vector[c] - oracle) / std::max(std::abs(oracle), 1e-12);
      worst = std::max(worst, err);
    }
    // Decision level: a fixed linear scorer must decide identically after
    // any reordering of the segments.
    std::vector<double> w(dim);
    for (auto& v : w) v = rng.normal();
    auto decide = [&](const encoders::Embedding& e) {
      double z = 0;
      for (std::size_t c = 0; c < dim; ++c) z += w[c] * e.vector[c];
      return z >= 0 ? 1 : 0;
    };
    const int base = decide(pooled);
    for (int p = 0; p < 5; ++p) {
      auto shuffled = segs;
      rng.shuffle(std::span(shuffled));
      const auto again = encoders::pool_speaker(shuffled);
      decision_flips += decide(again) != base;
      bitwise_diffs += again.vector != pooled.vector;
    }
  }
  const bool pass = worst <= 1e-6 && decision_flips == 0 && bitwise_diffs == 0;
  return {pass, fmt::format("500 sets, max rel err {:.2e}, {} decision flips, {} bitwise diffs over 2500 permutations",
                            worst, decision_flips, bitwise_diffs)};
}

// --- 3 -------------------------------------------------------------------------

const char* kWorkedResponse =
    "Self-harm Behavior: 0 \n"
    "Pressure: 1 [\"my parents say I\xE2\x80\x99m not good enough\",\"they say some very awful things\"]\n"
    "Social Support: 1 [\"complained to my family\", \"felt calm after talking with my family\"]\n"
    "Unhealthy Outlets: 0 \n"
    "Exercise: 1 [\"exercised at home on the weekend\"]\n";

Outcome worked_response_round_trip() {
  const auto v = indicators::parse_response(kWorkedResponse);
  const std::array<int, 5> flags = {0, 1, 1, 0, 1};
  const std::array<std::vector<std::string>, 5> evidence = {
      std::vector<std::string>{},
      {"my parents say I\xE2\x80\x99m not good enough", "they say some very awful things"},
      {"complained to my family", "felt calm after talking with my family"},
      {},
      {"exercised at home on the weekend"}};
  const bool parsed = v.flags == flags && v.evidence == evidence &&
                      indicators::to_feature_row(v) == flags;
  const auto again = indicators::parse_response(indicators::render_response(v));
  const bool round = again.flags == v.flags && again.evidence == v.evidence;
  return {parsed && round, fmt::format("flags ({},{},{},{},{}), quotes {}, render/re-parse identity {}",
                                       v.flags[0], v.flags[1], v.flags[2], v.flags[3], v.flags[4],
                                       parsed ? "exact" : "DIFFER", round ? "holds" : "BROKEN")};
}

// --- 4 -------------------------------------------------------------------------

// Independent restatement of the evidence-count invariant.
bool vector_is_valid(const indicators::IndicatorVector& v) {
  for (std::size_t k = 0; k < 5; ++k) {
    if (v.flags[k] != 0 && v.flags[k] != 1) return false;
    const auto& ev = v.evidence[k];
    if (v.flags[k] == 0 && !ev.empty()) return false;
    if (v.flags[k] == 1 && (ev.empty() || ev.size() > 3)) return false;
    for (const auto& q : ev) {
      if (q.empty()) return false;
    }
  }
  return true;
}

std::string fuzz_response(Rng& rng) {
  static const std::vector<std::string> names = {"Self-harm Behavior", "Pressure", "Social Support",
                                                 "Unhealthy Outlets", "Exercise"};
  static const std::vector<std::string> junk = {
      "[", "]", "\"", ",", ":", " ", "\n", "1", "0", "2", "-1", "\xE2\x80\x9C", "\xE2\x80\x9D", "\\", "{transcript}",
      "Note:", "Pressure", "yes", "\t", "\r\n", "[]", "\"\"", "\xFF", "\xC3\x28", "  "};
  std::vector<std::string> lines;
  for (const auto& name : names) {
    const int flag = static_cast<int>(rng.index(2));
    std::string line = name + ": " + std::to_string(flag);
    const std::size_t quotes = flag ? 1 + rng.index(3) : 0;
    if (quotes) {
      line += " [";
      for (std::size_t q = 0; q < quotes; ++q) {
        if (q) line += rng.bernoulli(0.5) ? ", " : ",";
        const bool curly = rng.bernoulli(0.3);
        line += curly ? "\xE2\x80\x9C" : "\"";
        line += fmt::format("quote {} of {}", q, name);
        line += curly ? "\xE2\x80\x9D" : "\"";
      }
      line += "]";
    }
    lines.push_back(line);
  }
  // Structural mutations.
  const std::size_t ops = rng.index(6);
  for (std::size_t o = 0; o < ops; ++o) {
    switch (rng.index(8)) {
      case 0:
        if (!lines.empty()) lines.erase(lines.begin() + static_cast<long>(rng.index(lines.size())));
        break;
      case 1:
        if (!lines.empty()) lines.push_back(lines[rng.index(lines.size())]);
        break;
      case 2:
        if (lines.size() > 1) std::swap(lines[rng.index(lines.size())], lines[rng.index(lines.size())]);
        break;
      case 3:
        lines.insert(lines.begin() + static_cast<long>(rng.index(lines.size() + 1)), "Here is my analysis:");
        break;
      case 4: {  // flip a flag without touching the quotes
        if (lines.empty()) break;
        auto& l = lines[rng.index(lines.size())];
        if (auto p = l.find(": "); p != std::string::npos && p + 2 < l.size()) {
          l[p + 2] = l[p + 2] == '0' ? '1' : '0';
        }
        break;
      }
      case 5: {  // add quotes
        if (lines.empty()) break;
        auto& l = lines[rng.index(lines.size())];
        if (!l.empty() && l.back() == ']') {
          l.pop_back();
          l += ", \"extra one\", \"extra two\"]";
        } else {
          l += " [\"added\"]";
        }
        break;
      }
      default:
        break;
    }
  }
  std::string text;
  for (const auto& l : lines) text += l + (rng.bernoulli(0.1) ? "\r\n" : "\n");
  // Byte-level mutations.
  const std::size_t edits = rng.bernoulli(0.5) ? rng.index(4) : 0;
  for (std::size_t e = 0; e < edits && !text.empty(); ++e) {
    const std::size_t at = rng.index(text.size());
    switch (rng.index(3)) {
      case 0: text.insert(at, junk[rng.index(junk.size())]); break;
      case 1: text.erase(at, 1 + rng.index(3)); break;
      default: text[at] = static_cast<char>(rng.index(256)); break;
    }
  }
  return text;
}

Outcome parser_robustness() {
  Rng rng(404);
  std::size_t valid = 0, parse_errors = 0, escapes = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string text = fuzz_response(rng);
    try {
      const auto v = indicators::parse_response(text);
      if (vector_is_valid(v)) {
        ++valid;
      } else {
        ++escapes;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParseError) {
        ++parse_errors;
      } else {
        ++escapes;
      }
    } catch (...) {
      ++escapes;
    }
  }
  return {escapes == 0 && valid > 0 && parse_errors > 0,
          fmt::format("10000 fuzzed responses: {} valid, {} ParseError, {} escapes", valid, parse_errors, escapes)};
}

// --- 5 -------------------------------------------------------------------------

// Nearest double to a rational with small numerator and denominator: both
// convert exactly, and IEEE division rounds correctly.
double to_double(const Rational& r) {
  return static_cast<double>(boost::multiprecision::numerator(r)) /
         static_cast<double>(boost::multiprecision::denominator(r));
}

struct OracleMetrics {
  double accuracy, precision, recall, f1;
};

OracleMetrics oracle_metrics(const std::vector<int>& t, const std::vector<int>& p) {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 1 && p[i] == 1) ++tp;
    if (t[i] == 0 && p[i] == 1) ++fp;
    if (t[i] == 0 && p[i] == 0) ++tn;
    if (t[i] == 1 && p[i] == 0) ++fn;
  }
  const Rational acc(tp + tn, static_cast<long>(t.size()));
  const Rational prec = tp + fp ? Rational(tp, tp + fp) : Rational(0);
  const Rational rec = tp + fn ? Rational(tp, tp + fn) : Rational(0);
  const Rational f1 = prec + rec != 0 ? Rational(2) * prec * rec / (prec + rec) : Rational(0);
  return {to_double(acc), to_double(prec), to_double(rec), to_double(f1)};
}

Outcome metrics_oracle() {
  Rng rng(505);
  std::size_t mismatches = 0, f1_zero = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.index(300);
    std::vector<int> t(n), p(n);
    const int mode = static_cast<int>(rng.index(5));
    for (std::size_t j = 0; j < n; ++j) {
      t[j] = rng.bernoulli(0.5);
      p[j] = mode == 0 ? 0 : mode == 1 ? 1 - t[j] : static_cast<int>(rng.bernoulli(0.5));
    }
    const auto m = classify::compute_metrics(t, p);
    const auto o = oracle_metrics(t, p);
    mismatches += !(m.accuracy == o.accuracy && m.precision == o.precision && m.recall == o.recall && m.f1 == o.f1);
    f1_zero += o.f1 == 0.0;
  }
  return {mismatches == 0 && f1_zero > 0,
          fmt::format("1000 random pairs, {} mismatches, {} with F1 = 0", mismatches, f1_zero)};
}

// --- 6 -------------------------------------------------------------------------

Outcome cv_partitions() {
  Rng rng(606);
  std::size_t failures = 0;
  std::string first_failure;
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + rng.index(9);
    const std::size_t n = 2 * k + rng.index(500 - 2 * k + 1);
    std::vector<int> y(n);
    // Each class gets at least k members.
    for (std::size_t j = 0; j < n; ++j) y[j] = j < k ? 1 : j < 2 * k ? 0 : static_cast<int>(rng.bernoulli(0.3));
    rng.shuffle(std::span(y));
    const std::uint64_t seed = rng.next();
    const auto folds = classify::make_fold_indices(y, k, seed);
    std::vector<int> seen(n, 0);
    bool ok = folds.size() == k;
    std::map<int, std::vector<std::size_t>> per_class;
    for (const auto& f : folds) {
      std::size_t pos = 0;
      for (auto idx : f) {
        if (idx >= n) ok = false; else ++seen[idx];
        pos += y[idx];
      }
      per_class[1].push_back(pos);
      per_class[0].push_back(f.size() - pos);
    }
    ok = ok && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
    for (auto& [c, counts] : per_class) {
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      ok = ok && *hi - *lo <= 1;
    }
    ok = ok && classify::make_fold_indices(y, k, seed) == folds;
    if (!ok && failures++ == 0) first_failure = fmt::format(" (first: n={}, k={})", n, k);
  }
  return {failures == 0, fmt::format("200 random (n, k, seed): {} failures{}", failures, first_failure)};
}

// --- 7 -------------------------------------------------------------------------

Outcome mlp_sanity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(707);
  const std::size_t n = 200, d = 16;
  classify::FeatureMatrix x(n, d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2;
    for (std::size_t c = 0; c < d; ++c) x(i, c) = (y[i] ? 1.5 : -1.5) + rng.normal();
  }
  // Stratified 80/20 split; the trainer carves its own validation split.
  const auto [keep, held] = classify::stratified_holdout(y, 0.2, 7070);
  std::vector<int> y_train, y_test;
  for (auto i : keep) y_train.push_back(y[i]);
  for (auto i : held) y_test.push_back(y[i]);
  const classify::MlpConfig cfg;
  const auto model = classify::fit_mlp(x.select_rows(keep), y_train, cfg, 77);
  const auto pred = classify::predict(model, x.select_rows(held));
  const double acc = classify::compute_metrics(y_test, pred.labels).accuracy;

  // Flat validation metric: an all-negative validation set keeps F1 at 0 and
  // a vanishing step size freezes the parameters, so the loss cannot move.
  classify::FeatureMatrix xf(64, 4);
  std::vector<int> yf(64);
  for (std::size_t i = 0; i < 64; ++i) {
    yf[i] = i % 2;
    for (std::size_t c = 0; c < 4; ++c) xf(i, c) = rng.normal() + yf[i];
  }
  classify::FeatureMatrix xv(8, 4);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t c = 0; c < 4; ++c) xv(i, c) = rng.normal();
  }
  const std::vector<int> yv(8, 0);
  classify::MlpConfig flat_cfg;
  flat_cfg.seed = 5;
  flat_cfg.learning_rate = 1e-300;
  classify::MlpTrainingInfo info;
  classify::train_mlp(xf, yf, flat_cfg, xv, yv, &info);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool halts = info.epochs_run == info.best_epoch + flat_cfg.patience;
  const bool pass = acc >= 0.95 && model.metadata().epochs_run <= 300 && halts && secs < 60.0;
  return {pass, fmt::format("held-out accuracy {:.3f} after {} epochs; flat run best epoch {}, halted at {} "
                            "(patience {}); {:.1f} s",
                            acc, model.metadata().epochs_run, info.best_epoch, info.epochs_run, flat_cfg.patience,
                            secs)};
}

// --- 8 -------------------------------------------------------------------------

Outcome mlp_parameter_count() {
  const std::vector<std::size_t> hidden = {64, 32};
  const std::size_t count = classify::mlp_parameter_count(1024, hidden);
  // (1024*64 + 64) + (64*32 + 32) + (32*2 + 2)
  const std::size_t oracle = (1024 * 64 + 64) + (64 * 32 + 32) + (32 * 2 + 2);
  return {count == 67746 && count == oracle, fmt::format("d = 1024 -> {} parameters", count)};
}

// --- 9 -------------------------------------------------------------------------

Outcome rf_consistency() {
  Rng rng(909);
  classify::FeatureMatrix x(120, 5);
  std::vector<int> y(120);
  for (std::size_t i = 0; i < 120; ++i) {
    for (std::size_t c = 0; c < 5; ++c) x(i, c) = static_cast<double>(rng.bernoulli(0.5));
    y[i] = static_cast<int>(x(i, 0));
  }
  const auto rule = classify::fit_rf(x, y, {}, 9);
  const double train_acc = classify::compute_metrics(y, classify::predict(rule, x).labels).accuracy;

  double sum = 0.0;
  for (int s = 0; s < 10; ++s) {
    Rng r(9000 + s);
    classify::FeatureMatrix xt(200, 5);
    std::vector<int> yt(200);
    for (std::size_t i = 0; i < 200; ++i) {
      for (std::size_t c = 0; c < 5; ++c) xt(i, c) = static_cast<double>(r.bernoulli(0.5));
      yt[i] = r.bernoulli(0.5);
    }
    std::vector<std::size_t> tr(100), te(100);
    std::iota(tr.begin(), tr.end(), 0);
    std::iota(te.begin(), te.end(), 100);
    const std::vector<int> ytr(yt.begin(), yt.begin() + 100), yte(yt.begin() + 100, yt.end());
    const auto m = classify::fit_rf(xt.select_rows(tr), ytr, {}, static_cast<std::uint64_t>(s));
    sum += classify::compute_metrics(yte, classify::predict(m, xt.select_rows(te)).labels).accuracy;
  }
  const double mean = sum / 10.0;
  return {train_acc == 1.0 && mean >= 0.4 && mean <= 0.6,
          fmt::format("rule training accuracy {:.3f}; chance-level mean held-out accuracy {:.3f} over 10 seeds",
                      train_acc, mean)};
}

// --- 10 ------------------------------------------------------------------------

struct VoteInstance {
  ensemble::EnsembleSpec spec;
  ensemble::MemberPredictions preds;
  std::map<std::string, int> labels;
  std::vector<std::pair<long, long>> weights;  // numerator, denominator per member
};

VoteInstance random_instance(Rng& rng) {
  VoteInstance inst;
  std::vector<int> ids(16);
  std::iota(ids.begin(), ids.end(), 1);
  rng.shuffle(std::span(ids));
  const std::size_t m = 1 + rng.index(9);
  inst.spec.name = "random";
  inst.spec.tie_break = static_cast<ensemble::TieBreak>(rng.index(3));
  for (std::size_t i = 0; i < m; ++i) {
    const long num = 1 + static_cast<long>(rng.index(6));
    const long den = 1 + static_cast<long>(rng.index(4));
    const auto& row = ensemble::model_table_row(ids[i]);
    inst.spec.members.push_back({ids[i], row.source, row.classifier, row.task, ensemble::Weight(num, den)});
    inst.weights.emplace_back(num, den);
  }
  const std::size_t n = 1 + rng.index(200);
  for (std::size_t p = 0; p < n; ++p) {
    const std::string pid = fmt::format("P{:03}", p);
    inst.labels[pid] = rng.bernoulli(0.5);
    for (const auto& mem : inst.spec.members) {
      if (!rng.bernoulli(0.1)) inst.preds[mem.member_id][pid] = rng.bernoulli(0.5);
    }
  }
  return inst;
}

// Per-participant recount on integers: scale every weight by the lcm of the
// denominators.
std::map<std::string, std::optional<int>> recount(const VoteInstance& inst) {
  long l = 1;
  for (const auto& [_, den] : inst.weights) l = std::lcm(l, den);
  std::map<std::string, std::optional<int>> out;
  for (const auto& [pid, _] : inst.labels) {
    long pos = 0, neg = 0;
    bool any = false;
    for (std::size_t i = 0; i < inst.spec.members.size(); ++i) {
      const auto& votes = inst.preds.count(inst.spec.members[i].member_id)
                              ? inst.preds.at(inst.spec.members[i].member_id)
                              : std::map<std::string, int>{};
      auto it = votes.find(pid);
      if (it == votes.end()) continue;
      any = true;
      const long w = inst.weights[i].first * (l / inst.weights[i].second);
      (it->second ? pos : neg) += w;
    }
    (void)any;
    if (pos > neg) {
      out[pid] = 1;
    } else if (neg > pos) {
      out[pid] = 0;
    } else if (inst.spec.tie_break == ensemble::TieBreak::kPositive) {
      out[pid] = 1;
    } else if (inst.spec.tie_break == ensemble::TieBreak::kNegative) {
      out[pid] = 0;
    } else {
      out[pid] = std::nullopt;
    }
  }
  return out;
}

Outcome voting_oracle() {
  Rng rng(1010);
  std::size_t mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_instance(rng);
    std::vector<std::string> scope;
    for (const auto& [pid, _] : inst.labels) scope.push_back(pid);
    const auto ev = ensemble::evaluate_ensemble(inst.spec, inst.preds, inst.labels, &scope);
    const auto oracle = recount(inst);
    std::vector<int> t, p;
    bool ok = ev.records.size() == oracle.size();
    for (const auto& rec : ev.records) {
      ok = ok && oracle.at(rec.participant_id) == rec.result.final;
      if (oracle.at(rec.participant_id)) {
        t.push_back(inst.labels.at(rec.participant_id));
        p.push_back(*oracle.at(rec.participant_id));
      }
    }
    if (!t.empty()) {
      const auto o = oracle_metrics(t, p);
      ok = ok && ev.metrics.accuracy == o.accuracy && ev.metrics.f1 == o.f1 && ev.metrics.precision == o.precision &&
           ev.metrics.recall == o.recall;
    }
    mismatches += !ok;
  }

  std::size_t scaling_changes = 0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = random_instance(rng);
    auto scaled = inst.spec;
    const ensemble::Weight c(1 + static_cast<long>(rng.index(1000)), 1 + static_cast<long>(rng.index(1000)));
    for (auto& m : scaled.members) m.weight *= c;
    const auto a = ensemble::combine(inst.spec, inst.preds);
    const auto b = ensemble::combine(scaled, inst.preds);
    for (std::size_t j = 0; j < a.size(); ++j) scaling_changes += a[j].result.final != b[j].result.final;
  }

  // {A:0, B:0, D:1 (w = 2)} under the positive tie rule.
  ensemble::EnsembleSpec spec;
  for (int id : {1, 2, 16}) {
    const auto& row = ensemble::model_table_row(id);
    spec.members.push_back({id, row.source, row.classifier, row.task, id == 16 ? 2 : 1});
  }
  const auto r = ensemble::vote({{1, 0}, {2, 0}, {16, 1}}, spec);
  const bool worked = r.final == 1 && r.w_pos == 2 && r.w_neg == 2 && r.tie;

  return {mismatches == 0 && scaling_changes == 0 && worked,
          fmt::format("200 random instances: {} mismatches; 100 scalings: {} changed decisions; "
                      "worked example -> ({}, {}, {})",
                      mismatches, scaling_changes, r.final ? std::to_string(*r.final) : "none",
                      ensemble::format_weight(r.w_pos), ensemble::format_weight(r.w_neg))};
}

// --- 11 ------------------------------------------------------------------------

Outcome combination_wiring() {
  using ensemble::FeatureSource;
  using corpus::TaskKind;
  const std::set<std::pair<FeatureSource, TaskKind>> expected = {
      {FeatureSource::kHubert, TaskKind::kER},   {FeatureSource::kHubert, TaskKind::kPR},
      {FeatureSource::kWav2Vec2, TaskKind::kPR}, {FeatureSource::kWav2Vec2, TaskKind::kED},
      {FeatureSource::kWhisper, TaskKind::kED},  {FeatureSource::kRoberta, TaskKind::kER},
      {FeatureSource::kDeepSeek, TaskKind::kER}};
  const auto spec = ensemble::preset_combination("combo-B");
  std::set<std::pair<FeatureSource, TaskKind>> got;
  std::string listing;
  for (const auto& m : spec.members) {
    got.emplace(m.source, m.task);
    listing += fmt::format("{}({},{}) ", m.member_id, ensemble::display_name(m.source), corpus::to_string(m.task));
  }
  const bool pass = spec.members.size() == 7 && got == expected && spec.member_tuple() == "(1, 2, 5, 6, 9, 13, 16)";
  return {pass, fmt::format("combo-B -> {}", listing)};
}

// --- 12 ------------------------------------------------------------------------

std::map<std::string, std::string> run_synthetic(const fs::path& root) {
  fs::remove_all(root);
  pipeline::SyntheticCorpusOptions opt;
  opt.participants = 10;
  opt.seed = 12;
  const auto manifest = pipeline::write_synthetic_corpus(root / "corpus", opt);
  write_file_atomic(root / "config.json", pipeline::mock_config_json(manifest, root / "cache", 12));
  pipeline::Pipeline p(pipeline::load_config(root / "config.json"));
  p.run_all();
  std::map<std::string, std::string> reports;
  const auto dir = p.stage_dir(pipeline::Stage::kReport);
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name == "stage.json") continue;
    std::string body = read_file(e.path());
    if (e.path().extension() == ".json") {
      auto j = nlohmann::json::parse(body);
      j.erase("generated_at");
      body = j.dump(2);
    }
    reports[name] = body;
  }
  return reports;
}

Outcome end_to_end_determinism() {
  const fs::path base = fs::temp_directory_path() / fmt::format("swpipe_acceptance_{}", ::getpid());
  const auto a = run_synthetic(base / "a");
  const auto b = run_synthetic(base / "b");
  std::size_t txt = 0;
  for (const auto& [name, _] : a) txt += name.ends_with(".txt");
  const bool pass = a == b && txt == 10;
  fs::remove_all(base);
  return {pass, fmt::format("{} reports per run; runs {}", txt, a == b ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"segmentation oracle", segmentation_oracle},
      {"pooling equivalence", pooling_equivalence},
      {"indicator response round-trip", worked_response_round_trip},
      {"parser robustness", parser_robustness},
      {"metrics oracle", metrics_oracle},
      {"cv partition properties", cv_partitions},
      {"mlp sanity", mlp_sanity},
      {"mlp parameter count", mlp_parameter_count},
      {"random forest consistency", rf_consistency},
      {"voting oracle", voting_oracle},
      {"combination wiring", combination_wiring},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("[{}] {:>2}. {}: {} ({:.2f} s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail, secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
