#include "owaic/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "owaic/errors.hpp"
#include "owaic/models.hpp"
#include "owaic/stream.hpp"

namespace owaic {

namespace {

using nlohmann::json;

constexpr double kFailureFlagFraction = 0.02;

Family family_kind(StudyFamily f) { return f == StudyFamily::sv ? Family::sv : Family::hier; }

std::vector<VariantSpec> hier_variants() {
  return {{PredictiveMode::conditional, "grouped"},
          {PredictiveMode::conditional, "ungrouped"},
          {PredictiveMode::marginal, "grouped"},
          {PredictiveMode::marginal, "ungrouped"}};
}

std::vector<VariantSpec> sv_variants() {
  std::vector<VariantSpec> out;
  for (PredictiveMode mode : {PredictiveMode::conditional, PredictiveMode::marginal}) {
    for (int block : {1, 2, 10, 20, 200}) out.push_back({mode, "blocks:" + std::to_string(block)});
  }
  return out;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw FormatError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& target) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad value for '") + key + "': " + e.what());
  }
}

Dataset make_dataset(const StudyConfig& config, std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, {0}));
  if (config.family == StudyFamily::sv) return generate_sv(config.sv_truth, config.length, rng);
  return generate_hier(config.hier_truth, config.groups, config.per_group, rng);
}

ReplicateRecord run_task(const StudyConfig& config, std::size_t replicate, const std::string& model_name) {
  ReplicateRecord rec;
  rec.replicate = replicate;
  rec.seed = config.replicate_seed(replicate);
  rec.model = model_name;
  try {
    const Dataset data = make_dataset(config, rec.seed);
    const ModelGraph model = make_model(model_name, data);
    std::vector<WaicVariant> variants;
    for (const VariantSpec& v : config.variants) {
      const PredictiveConfig predictive = v.mode == PredictiveMode::marginal
                                              ? PredictiveConfig::marginal(config.inner_draws)
                                              : PredictiveConfig::conditional();
      variants.push_back({v.label(), make_partition(model, v.partition), predictive});
    }
    McmcConfig mcmc = config.mcmc;
    mcmc.seed = derive_seed(rec.seed, {1, static_cast<std::uint64_t>(model_name.front())});
    RunOptions options;
    options.allow_latent_free_marginal = true;
    const McmcReport run = run_mcmc_waic(model, variants, mcmc, options);
    for (const WaicResult& r : run.results) {
      VariantOutcome outcome{r.full(), {}};
      for (const FractionResult& f : r.fractions) outcome.fraction_waic.push_back(f.waic);
      rec.variants.push_back(std::move(outcome));
    }
    rec.min_ess = std::numeric_limits<double>::infinity();
    for (const ParameterSummary& p : run.parameters) rec.min_ess = std::min(rec.min_ess, p.ess);
    rec.low_ess_count = run.low_ess_count;
    rec.neg_inf_count = run.neg_inf_count;
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.variants.clear();
  }
  return rec;
}

struct Moments {
  double mean = 0.0;
  std::optional<double> se;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    const double n = static_cast<double>(xs.size());
    m.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return m;
}

}  // namespace

const char* to_string(StudyFamily family) noexcept {
  switch (family) {
    case StudyFamily::hier1: return "hier1";
    case StudyFamily::hier2: return "hier2";
    case StudyFamily::sv: return "sv";
  }
  return "?";
}

StudyFamily parse_family(std::string_view text) {
  if (text == "hier1") return StudyFamily::hier1;
  if (text == "hier2") return StudyFamily::hier2;
  if (text == "sv") return StudyFamily::sv;
  throw DomainError("unknown study family '" + std::string(text) + "' (expected hier1, hier2 or sv)");
}

std::string VariantSpec::label() const { return partition + " " + to_string(mode); }

StudyConfig StudyConfig::defaults(StudyFamily family) {
  StudyConfig c;
  c.family = family;
  c.mcmc.burn_in = 500;
  c.mcmc.keep = 2000;
  switch (family) {
    case StudyFamily::hier1:
      c.groups = 20;
      c.per_group = 100;
      break;
    case StudyFamily::hier2:
      c.groups = 40;
      c.per_group = 60;
      break;
    case StudyFamily::sv:
      c.length = 200;
      break;
  }
  if (family == StudyFamily::sv) {
    c.models = {"P", "Z", "I"};
    c.variants = sv_variants();
    c.inner_draws = 1000;
    c.true_model = "P";
  } else {
    c.models = {"H", "F", "S"};
    c.variants = hier_variants();
    c.inner_draws = 500;
    c.true_model = "H";
  }
  return c;
}

std::uint64_t StudyConfig::replicate_seed(std::size_t replicate) const {
  if (!replicate_seeds.empty()) return replicate_seeds.at(replicate);
  return derive_seed(master_seed, {static_cast<std::uint64_t>(replicate)});
}

void StudyConfig::validate() const {
  if (replicates < 1) throw DomainError("replicates must be at least 1");
  if (variants.empty()) throw DomainError("at least one WAIC variant is required");
  if (models.empty()) throw DomainError("at least one model is required");
  if (mcmc.keep < 2) throw DomainError("mcmc keep must be at least 2");
  if (!replicate_seeds.empty() && replicate_seeds.size() != replicates) {
    throw DomainError("replicateSeeds has " + std::to_string(replicate_seeds.size()) +
                      " entries for " + std::to_string(replicates) + " replicates");
  }
  std::set<std::string> seen;
  for (const std::string& m : models) {
    if (model_info(m).family != family_kind(family)) {
      throw DomainError("model " + m + " does not belong to the " + to_string(family) + " family");
    }
    if (!seen.insert(m).second) throw DomainError("model " + m + " listed twice");
  }
  if (!seen.contains(true_model)) throw DomainError("true model '" + true_model + "' is not fitted");
  std::set<std::string> labels;
  for (const VariantSpec& v : variants) {
    if (v.mode == PredictiveMode::marginal && inner_draws < 1) {
      throw DomainError("innerDraws must be at least 1 for marginal variants");
    }
    if (v.partition == "grouped" && family == StudyFamily::sv) {
      throw DomainError("stochastic volatility models have no natural grouping; use blocks:<n>");
    }
    if (v.partition != "ungrouped" && v.partition != "grouped" && !v.partition.starts_with("blocks:")) {
      throw DomainError("unknown partition descriptor '" + v.partition + "'");
    }
    if (!labels.insert(v.label()).second) throw DomainError("variant '" + v.label() + "' listed twice");
  }
  if (family == StudyFamily::sv) {
    if (!(std::abs(sv_truth.phi) < 1.0) || !(sv_truth.sigma > 0.0) || length < 2) {
      throw DomainError("invalid stochastic volatility settings");
    }
  } else if (!(hier_truth.tau > 0.0) || !(hier_truth.sigma > 0.0) || groups < 1 || per_group < 1) {
    throw DomainError("invalid hierarchical settings");
  }
}

void apply_full_scale(StudyConfig& config) {
  const bool sv = config.family == StudyFamily::sv;
  config.replicates = sv ? 300 : 500;
  config.mcmc.keep = 5000;
  config.inner_draws = sv ? 3000 : 1000;
  config.replicate_seeds.clear();
}

StudyConfig parse_study_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("study config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("study config must be a JSON object");
  check_keys(doc,
             {"family", "trueParams", "groups", "perGroup", "length", "replicates", "models",
              "variants", "mcmc", "innerDraws", "masterSeed", "replicateSeeds", "trueModel", "threads"},
             "study config");
  if (!doc.contains("family") || !doc["family"].is_string()) {
    throw FormatError("study config needs a \"family\" string");
  }
  StudyConfig c = StudyConfig::defaults(parse_family(doc["family"].get<std::string>()));

  if (doc.contains("trueParams")) {
    const json& tp = doc["trueParams"];
    if (!tp.is_object()) throw FormatError("trueParams must be an object");
    if (c.family == StudyFamily::sv) {
      check_keys(tp, {"phi", "sigma", "mu"}, "trueParams");
      read_into(tp, "phi", c.sv_truth.phi);
      read_into(tp, "sigma", c.sv_truth.sigma);
      read_into(tp, "mu", c.sv_truth.mu);
    } else {
      check_keys(tp, {"mu", "tau", "sigma"}, "trueParams");
      read_into(tp, "mu", c.hier_truth.mu);
      read_into(tp, "tau", c.hier_truth.tau);
      read_into(tp, "sigma", c.hier_truth.sigma);
    }
  }
  read_into(doc, "groups", c.groups);
  read_into(doc, "perGroup", c.per_group);
  read_into(doc, "length", c.length);
  read_into(doc, "replicates", c.replicates);
  read_into(doc, "models", c.models);
  read_into(doc, "innerDraws", c.inner_draws);
  read_into(doc, "masterSeed", c.master_seed);
  read_into(doc, "replicateSeeds", c.replicate_seeds);
  read_into(doc, "trueModel", c.true_model);
  read_into(doc, "threads", c.threads);

  if (doc.contains("variants")) {
    const json& vs = doc["variants"];
    if (!vs.is_array()) throw FormatError("variants must be an array");
    c.variants.clear();
    for (const json& v : vs) {
      if (!v.is_object()) throw FormatError("each variant must be an object");
      check_keys(v, {"mode", "partition"}, "variant");
      VariantSpec spec;
      std::string mode = "conditional";
      read_into(v, "mode", mode);
      spec.mode = parse_mode(mode);
      read_into(v, "partition", spec.partition);
      c.variants.push_back(std::move(spec));
    }
  }
  if (doc.contains("mcmc")) {
    const json& m = doc["mcmc"];
    if (!m.is_object()) throw FormatError("mcmc must be an object");
    check_keys(m, {"burnIn", "keep", "initialScale", "scales", "adapt", "adaptBatch", "essThreshold", "essMaxLag"},
               "mcmc");
    read_into(m, "burnIn", c.mcmc.burn_in);
    read_into(m, "keep", c.mcmc.keep);
    read_into(m, "initialScale", c.mcmc.initial_scale);
    read_into(m, "scales", c.mcmc.scale_overrides);
    read_into(m, "adapt", c.mcmc.adapt);
    read_into(m, "adaptBatch", c.mcmc.adapt_batch);
    read_into(m, "essThreshold", c.mcmc.ess_threshold);
    read_into(m, "essMaxLag", c.mcmc.ess_max_lag);
  }
  c.validate();
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open study config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_study_config(text.str());
}

std::size_t select_model(const std::vector<double>& waic) {
  if (waic.empty()) throw DomainError("model selection needs at least one WAIC value");
  std::size_t best = 0;
  for (std::size_t i = 1; i < waic.size(); ++i) {
    if (waic[i] < waic[best]) best = i;
  }
  return best;
}

StudyReport run_study(const StudyConfig& config, const ProgressCallback& progress) {
  config.validate();
  const std::size_t n_models = config.models.size();
  const std::size_t total = config.replicates * n_models;
  std::vector<ReplicateRecord> records(total);

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  const auto worker = [&] {
    for (std::size_t t = next++; t < total; t = next++) {
      records[t] = run_task(config, t / n_models, config.models[t % n_models]);
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(++done, total);
      }
    }
  };
  std::size_t threads = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
  threads = std::clamp<std::size_t>(threads, 1, total);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  std::vector<std::string> labels;
  for (const VariantSpec& v : config.variants) labels.push_back(v.label());
  StudyReport report = aggregate(to_string(config.family), config.models, std::move(labels),
                                 config.true_model, std::move(records));
  const bool any_marginal = std::any_of(config.variants.begin(), config.variants.end(),
                                        [](const VariantSpec& v) { return v.mode == PredictiveMode::marginal; });
  report.fractions = any_marginal ? PredictiveConfig::marginal(config.inner_draws).fractions()
                                  : PredictiveConfig::conditional().fractions();
  return report;
}

StudyReport aggregate(std::string family, std::vector<std::string> models,
                      std::vector<std::string> variants, std::string true_model,
                      std::vector<ReplicateRecord> records) {
  StudyReport report;
  report.family = std::move(family);
  report.models = std::move(models);
  report.variants = std::move(variants);
  report.records = std::move(records);
  const std::size_t n_models = report.models.size();
  const std::size_t n_variants = report.variants.size();
  StudyDiagnostics& diag = report.diagnostics;

  std::vector<std::size_t> replicate_ids;
  for (const ReplicateRecord& r : report.records) {
    ++diag.tasks;
    if (std::find(replicate_ids.begin(), replicate_ids.end(), r.replicate) == replicate_ids.end()) {
      replicate_ids.push_back(r.replicate);
    }
    if (!r.ok) {
      ++diag.failed_tasks;
      diag.messages.push_back("replicate " + std::to_string(r.replicate) + " model " + r.model +
                              " failed: " + r.error);
      continue;
    }
    if (r.variants.size() != n_variants) {
      throw IntegrityError("record for replicate " + std::to_string(r.replicate) + " has " +
                           std::to_string(r.variants.size()) + " variants, expected " +
                           std::to_string(n_variants));
    }
    if (r.low_ess_count > 0) ++diag.low_ess_runs;
    diag.neg_inf_values += r.neg_inf_count;
  }
  diag.failure_flag = diag.tasks > 0 && static_cast<double>(diag.failed_tasks) >
                                            kFailureFlagFraction * static_cast<double>(diag.tasks);
  if (diag.failure_flag) {
    diag.messages.push_back(std::to_string(diag.failed_tasks) + " of " + std::to_string(diag.tasks) +
                            " fits failed (more than 2%)");
  }
  if (diag.low_ess_runs > 0) {
    diag.messages.push_back(std::to_string(diag.low_ess_runs) +
                            " fits have a parameter below the effective sample size threshold");
  }
  if (diag.neg_inf_values > 0) {
    diag.messages.push_back(std::to_string(diag.neg_inf_values) +
                            " marginal h values were -inf; affected p_WAIC terms are +inf");
  }

  const auto model_index = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < n_models; ++i) {
      if (report.models[i] == name) return i;
    }
    return std::nullopt;
  };

  for (std::size_t v = 0; v < n_variants; ++v) {
    for (std::size_t i = 0; i < n_models; ++i) {
      std::vector<double> waic, lppd, pw;
      std::vector<std::vector<double>> fractions;
      for (const ReplicateRecord& r : report.records) {
        if (!r.ok || r.model != report.models[i]) continue;
        const VariantOutcome& o = r.variants[v];
        waic.push_back(o.full.waic);
        lppd.push_back(o.full.lppd);
        pw.push_back(o.full.p_waic);
        if (fractions.size() < o.fraction_waic.size()) fractions.resize(o.fraction_waic.size());
        for (std::size_t f = 0; f < o.fraction_waic.size(); ++f) fractions[f].push_back(o.fraction_waic[f]);
      }
      if (waic.empty()) continue;
      SummaryRow row;
      row.variant = report.variants[v];
      row.model = report.models[i];
      row.replicates = waic.size();
      const Moments mw = moments(waic), ml = moments(lppd), mp = moments(pw);
      row.mean_waic = mw.mean;
      row.se_waic = mw.se;
      row.mean_lppd = ml.mean;
      row.se_lppd = ml.se;
      row.mean_p_waic = mp.mean;
      row.se_p_waic = mp.se;
      for (const auto& f : fractions) row.fraction_mean_waic.push_back(moments(f).mean);
      report.summary.push_back(std::move(row));
    }
  }

  // Selection over replicates where every model was fitted.
  std::vector<std::vector<const ReplicateRecord*>> complete;
  for (std::size_t id : replicate_ids) {
    std::vector<const ReplicateRecord*> fits(n_models, nullptr);
    bool ok = true;
    for (const ReplicateRecord& r : report.records) {
      if (r.replicate != id) continue;
      const auto i = model_index(r.model);
      if (!i || !r.ok) {
        ok = false;
        continue;
      }
      fits[*i] = &r;
    }
    ok = ok && std::all_of(fits.begin(), fits.end(), [](const ReplicateRecord* p) { return p != nullptr; });
    if (ok) {
      complete.push_back(std::move(fits));
    } else {
      ++diag.excluded_replicates;
    }
  }
  const auto truth = model_index(true_model);
  for (std::size_t v = 0; v < n_variants && !complete.empty(); ++v) {
    SelectionRow row;
    row.variant = report.variants[v];
    row.true_model = true_model;
    row.replicates = complete.size();
    row.chosen.assign(n_models, 0);
    for (const auto& fits : complete) {
      std::vector<double> waic(n_models);
      for (std::size_t i = 0; i < n_models; ++i) waic[i] = fits[i]->variants[v].full.waic;
      const std::size_t best = select_model(waic);
      ++row.chosen[best];
      if (truth && best == *truth) ++row.correct;
    }
    const double n = static_cast<double>(row.replicates);
    row.proportion = static_cast<double>(row.correct) / n;
    if (row.replicates >= 2) row.se = std::sqrt(row.proportion * (1.0 - row.proportion) / n);
    report.selection.push_back(std::move(row));
  }
  return report;
}

WaicResult ingest_stream(const std::filesystem::path& stream,
                         const std::optional<std::filesystem::path>& meta) {
  return ingest_stream_state(stream, meta).finalize();
}

WaicState ingest_stream_state(const std::filesystem::path& stream,
                              const std::optional<std::filesystem::path>& meta) {
  std::ifstream in(stream);
  if (!in) throw FormatError("cannot open stream " + stream.string());
  StreamReader reader(in);
  const StreamHeader& header = reader.header();

  std::uint32_t digest = 0;
  std::size_t inner_draws = 0;
  if (meta) {
    std::ifstream m(*meta);
    if (!m) throw FormatError("cannot open meta file " + meta->string());
    json doc;
    try {
      doc = json::parse(m);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("meta file is not valid JSON: ") + e.what());
    }
    std::istringstream partition_text(doc.dump());
    const PartitionSpec partition = partition_from_grouping(read_partition_grouping(partition_text));
    if (partition.size() != header.elements) {
      throw IntegrityError("meta partition has " + std::to_string(partition.size()) +
                           " elements but the stream has M=" + std::to_string(header.elements));
    }
    std::optional<std::string> mode;
    try {
      if (doc.contains("mode")) mode = doc["mode"].get<std::string>();
      if (doc.contains("innerDraws")) inner_draws = doc["innerDraws"].get<std::size_t>();
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad meta field: ") + e.what());
    }
    if (mode && parse_mode(*mode) != header.mode) {
      throw IntegrityError("meta mode " + *mode + " does not match the stream mode " + to_string(header.mode));
    }
    digest = partition.digest();
  }
  WaicState state(header.elements, PredictiveConfig{header.mode, inner_draws}, digest);
  feed_stream(reader, state);
  return state;
}

}  // namespace owaic
