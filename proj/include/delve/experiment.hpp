#pragma once

// Batch orchestration: experiment configuration, the deterministic
// parallel runner over (persona × preset × index) cells, metric/analysis
// report files, table rendering, replay, persona validation, and judge
// calibration input handling.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "delve/analysis.hpp"
#include "delve/backends.hpp"
#include "delve/errors.hpp"
#include "delve/http_backends.hpp"
#include "delve/mediator.hpp"
#include "delve/metrics.hpp"
#include "delve/persona.hpp"
#include "delve/prompt.hpp"
#include "delve/session.hpp"

namespace delve {

// --- configuration -----------------------------------------------------------

struct ExperimentConfig {
  std::string personas_dir;
  std::vector<std::string> presets = {"easy"};
  int sessions_per_cell = 1;
  int parallelism = 1;
  std::string output_dir;
  double idss_threshold = kDefaultIdssThreshold;
  int max_turns = 15;
  int score_threshold = 4;
  int rapport_interval = 0;  // > 0 overrides every preset's k
  std::uint64_t seed = 0;
  std::string prompts_dir;  // empty = embedded defaults
  std::string closing_marker = kDefaultClosingMarker;
  bool analyze_strategies = false;
  bool analyze_ctrs = false;
  BackendDescriptor therapist_backend;
  BackendDescriptor client_backend;
  BackendDescriptor judge_backend;
  BackendDescriptor embedder_backend;
  std::optional<BackendDescriptor> extractor_backend;   // defaults to judge_backend
  std::optional<BackendDescriptor> annotator_backend;   // defaults to judge_backend
  std::optional<BackendDescriptor> ctrs_judge_backend;  // defaults to judge_backend

  bool operator==(const ExperimentConfig&) const = default;
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig config;

  auto require_string = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_string())
      throw ConfigError(std::string("config: missing string field \"") + key + "\"");
    return doc[key].get<std::string>();
  };
  config.personas_dir = require_string("personas_dir");
  config.output_dir = require_string("output_dir");

  if (doc.contains("presets")) {
    if (!doc["presets"].is_array() || doc["presets"].empty())
      throw ConfigError("config: \"presets\" must be a nonempty array of labels");
    config.presets.clear();
    for (const auto& p : doc["presets"]) {
      if (!p.is_string()) throw ConfigError("config: preset labels must be strings");
      preset_by_label(p.get<std::string>());  // validates
      config.presets.push_back(p.get<std::string>());
    }
  }

  auto opt_int = [&](const char* key, auto& into) {
    if (doc.contains(key)) {
      if (!doc[key].is_number())
        throw ConfigError(std::string("config: \"") + key + "\" must be a number");
      into = doc[key].get<std::decay_t<decltype(into)>>();
    }
  };
  opt_int("sessions_per_cell", config.sessions_per_cell);
  opt_int("parallelism", config.parallelism);
  opt_int("max_turns", config.max_turns);
  opt_int("score_threshold", config.score_threshold);
  opt_int("rapport_interval", config.rapport_interval);
  opt_int("seed", config.seed);
  if (doc.contains("idss_threshold"))
    config.idss_threshold = doc["idss_threshold"].get<double>();
  if (doc.contains("prompts_dir")) config.prompts_dir = doc["prompts_dir"].get<std::string>();
  if (doc.contains("closing_marker"))
    config.closing_marker = doc["closing_marker"].get<std::string>();

  if (config.sessions_per_cell < 1)
    throw ConfigError("config: sessions_per_cell must be >= 1");
  if (config.parallelism < 1) throw ConfigError("config: parallelism must be >= 1");
  if (config.max_turns < 1) throw ConfigError("config: max_turns must be >= 1");

  if (doc.contains("analysis")) {
    const auto& a = doc["analysis"];
    if (!a.is_object()) throw ConfigError("config: \"analysis\" must be an object");
    config.analyze_strategies = a.value("strategies", false);
    config.analyze_ctrs = a.value("ctrs", false);
  }

  if (!doc.contains("backends") || !doc["backends"].is_object())
    throw ConfigError("config: missing object field \"backends\"");
  const auto& backends = doc["backends"];
  auto require_backend = [&](const char* key) {
    if (!backends.contains(key))
      throw ConfigError(std::string("config: backends.") + key + " is required");
    return backend_descriptor_from_json(backends[key]);
  };
  config.therapist_backend = require_backend("therapist");
  config.client_backend = require_backend("client");
  config.judge_backend = require_backend("judge");
  config.embedder_backend = require_backend("embedder");
  if (backends.contains("extractor"))
    config.extractor_backend = backend_descriptor_from_json(backends["extractor"]);
  if (backends.contains("annotator"))
    config.annotator_backend = backend_descriptor_from_json(backends["annotator"]);
  if (backends.contains("ctrs_judge"))
    config.ctrs_judge_backend = backend_descriptor_from_json(backends["ctrs_judge"]);
  return config;
}

// Re-anchors every relative path in the config against `base` (normally
// the config file's directory), so a config tree works from any cwd.
inline void resolve_config_paths(ExperimentConfig& config,
                                 const std::filesystem::path& base) {
  auto resolve = [&](std::string& path) {
    if (!path.empty() && std::filesystem::path(path).is_relative())
      path = (base / path).lexically_normal().string();
  };
  resolve(config.personas_dir);
  resolve(config.output_dir);
  resolve(config.prompts_dir);
  auto resolve_descriptor = [&](BackendDescriptor& d) { resolve(d.script_path); };
  resolve_descriptor(config.therapist_backend);
  resolve_descriptor(config.client_backend);
  resolve_descriptor(config.judge_backend);
  resolve_descriptor(config.embedder_backend);
  if (config.extractor_backend) resolve_descriptor(*config.extractor_backend);
  if (config.annotator_backend) resolve_descriptor(*config.annotator_backend);
  if (config.ctrs_judge_backend) resolve_descriptor(*config.ctrs_judge_backend);
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config file: invalid JSON: ") + e.what());
  }
  ExperimentConfig config = experiment_config_from_json(doc);
  resolve_config_paths(config, std::filesystem::path(path).parent_path());
  return config;
}

// --- persona loading -----------------------------------------------------------

struct PersonaFile {
  std::string file;  // basename
  ClientProfile profile;
};

struct PersonaFailure {
  std::string file;
  std::string message;
};

struct PersonaScan {
  std::vector<PersonaFile> loaded;       // sorted by filename
  std::vector<PersonaFailure> failures;  // sorted by filename
};

inline PersonaScan scan_personas(const std::string& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("personas directory not found: " + dir);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  PersonaScan scan;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::ostringstream text;
    text << in.rdbuf();
    try {
      scan.loaded.push_back({file.filename().string(), load_profile(text.str())});
    } catch (const Error& e) {
      scan.failures.push_back({file.filename().string(), e.what()});
    }
  }
  return scan;
}

// One line per persona file; exit status reflects failures.
struct ValidationReport {
  std::vector<std::pair<std::string, std::string>> rows;  // file -> "ok" or diagnostic
  bool all_ok = true;
};

inline ValidationReport validate_personas(const std::string& personas_dir) {
  const PersonaScan scan = scan_personas(personas_dir);
  ValidationReport report;
  std::map<std::string, std::string> rows;
  for (const auto& p : scan.loaded) rows[p.file] = "ok";
  for (const auto& f : scan.failures) {
    rows[f.file] = f.message;
    report.all_ok = false;
  }
  for (auto& [file, message] : rows) report.rows.emplace_back(file, message);
  return report;
}

// --- deterministic parallel execution --------------------------------------------

namespace detail {

// Index-sharded loop: results land in caller-owned slots, so output
// order never depends on thread scheduling. fn must not throw.
template <typename Fn>
inline void parallel_for(std::size_t count, int parallelism, Fn&& fn) {
  if (count == 0) return;
  const int workers =
      std::max(1, std::min(parallelism, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& t : threads) t.join();
}

inline std::string sanitize_for_filename(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c))
      out += static_cast<char>(std::tolower(c));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "persona" : out;
}

inline std::string format_2dp(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

}  // namespace detail

// --- batch runner ------------------------------------------------------------------

struct SessionJobResult {
  std::string path;          // transcript file
  std::string persona;       // profile name
  std::string preset;        // label
  int session_index = 1;     // 1-based within the cell
  bool aborted = false;
  std::string error;         // abort/failure detail
  std::optional<SessionRecord> record;  // present unless the job failed outright
};

struct BatchSummary {
  int sessions_run = 0;
  int aborted = 0;
  std::vector<PersonaFailure> persona_failures;
  std::string report_path;
  std::vector<SessionJobResult> jobs;  // deterministic order
  nlohmann::json report;               // what was written to report_path
  bool ok = false;                     // no aborts, no persona failures
};

namespace detail {

struct SessionJob {
  const ClientProfile* profile;
  DifficultyPreset preset;
  int session_index;
  std::string path;
};

inline DifficultyPreset preset_for(const ExperimentConfig& config,
                                   const std::string& label) {
  DifficultyPreset preset = preset_by_label(label);
  if (config.rapport_interval > 0) preset.rapport_interval = config.rapport_interval;
  return preset;
}

inline SessionConfig session_config_for(const ExperimentConfig& config,
                                        const DifficultyPreset& preset,
                                        const PromptLibrary& prompts,
                                        const std::string& transcript_path) {
  SessionConfig sc = make_session_config(preset, prompts);
  sc.max_turns = config.max_turns;
  sc.mediator.score_threshold = config.score_threshold;
  sc.mediator.judge_params = config.judge_backend.params;
  sc.client_params = config.client_backend.params;
  sc.therapist_params = config.therapist_backend.params;
  sc.closing_marker = config.closing_marker;
  sc.seed = config.seed;
  sc.transcript_path = transcript_path;
  return sc;
}

// Constructing every descriptor once up front surfaces configuration
// problems (missing env credentials, bad endpoints, unreadable scripts)
// before any session starts.
inline void preflight_backends(const ExperimentConfig& config) {
  make_chat_backend(config.therapist_backend, Perspective::therapist);
  make_chat_backend(config.client_backend, Perspective::client);
  make_chat_backend(config.judge_backend, Perspective::observer);
  make_embedding_backend(config.embedder_backend);
  if (config.extractor_backend)
    make_chat_backend(*config.extractor_backend, Perspective::observer);
  if (config.annotator_backend)
    make_chat_backend(*config.annotator_backend, Perspective::observer);
  if (config.ctrs_judge_backend)
    make_chat_backend(*config.ctrs_judge_backend, Perspective::observer);
}

}  // namespace detail

// Runs sessions_per_cell sessions per (persona, preset) cell, persists
// every record (partial records included), computes per-preset metrics
// and optional analyses, and writes report.json plus CSV side files.
// Deterministic for scripted/fixed backends at any parallelism: job
// order is fixed, each job owns fresh backend instances, and results
// aggregate by job index.
inline BatchSummary run_batch(const ExperimentConfig& config) {
  const PromptLibrary prompts = config.prompts_dir.empty()
                                    ? PromptLibrary::embedded()
                                    : PromptLibrary::load(config.prompts_dir);
  detail::preflight_backends(config);

  const PersonaScan scan = scan_personas(config.personas_dir);
  if (scan.loaded.empty())
    throw ConfigError("no loadable personas in " + config.personas_dir);

  const std::filesystem::path out_dir(config.output_dir);
  const std::filesystem::path sessions_dir = out_dir / "sessions";
  std::filesystem::create_directories(sessions_dir);

  // Deterministic job list: personas (filename order) × presets (config
  // order) × session index.
  std::vector<detail::SessionJob> jobs;
  for (const auto& persona : scan.loaded) {
    for (const auto& label : config.presets) {
      const DifficultyPreset preset = detail::preset_for(config, label);
      for (int s = 1; s <= config.sessions_per_cell; ++s) {
        char index_buf[8];
        std::snprintf(index_buf, sizeof(index_buf), "%03d", s);
        const std::string file = detail::sanitize_for_filename(persona.profile.name) +
                                 "__" + label + "__s" + index_buf + ".jsonl";
        jobs.push_back({&persona.profile, preset, s, (sessions_dir / file).string()});
      }
    }
  }

  std::vector<SessionJobResult> results(jobs.size());
  detail::parallel_for(jobs.size(), config.parallelism, [&](std::size_t i) {
    const auto& job = jobs[i];
    SessionJobResult& result = results[i];
    result.path = job.path;
    result.persona = job.profile->name;
    result.preset = job.preset.label;
    result.session_index = job.session_index;
    try {
      auto therapist = make_chat_backend(config.therapist_backend, Perspective::therapist);
      auto client = make_chat_backend(config.client_backend, Perspective::client);
      auto judge = make_chat_backend(config.judge_backend, Perspective::observer);
      const SessionConfig sc =
          detail::session_config_for(config, job.preset, prompts, job.path);
      SessionRecord record = run_session(*job.profile, *therapist, *client, *judge, sc);
      persist_record(record, job.path);
      result.record = std::move(record);
    } catch (const AbortedSession& e) {
      result.aborted = true;
      result.error = e.what();
      try {
        persist_record(e.partial, job.path);
        result.record = e.partial;
      } catch (const Error& persist_error) {
        result.error += std::string("; persist failed: ") + persist_error.what();
      }
    } catch (const std::exception& e) {
      result.aborted = true;
      result.error = e.what();
    }
  });

  // Extraction per completed session (skipped when a session aborted).
  const BackendDescriptor extractor_descriptor =
      config.extractor_backend.value_or(config.judge_backend);
  const PromptTemplate extraction_template = prompts.get("extraction");
  std::vector<IdssEntry> idss_slots(results.size());
  detail::parallel_for(results.size(), config.parallelism, [&](std::size_t i) {
    const SessionJobResult& result = results[i];
    IdssEntry& entry = idss_slots[i];
    if (result.aborted || !result.record) return;
    entry.record = &*result.record;
    try {
      auto extractor = make_chat_backend(extractor_descriptor, Perspective::observer);
      entry.extraction = extract_diagram(*result.record, *extractor, extraction_template,
                                         extractor_descriptor.params);
    } catch (const Error& e) {
      entry.extraction.reset();
      entry.extraction_error = e.what();
    }
  });

  // Optional analyses.
  std::vector<std::vector<std::pair<int, StrategyLabel>>> strategy_slots(results.size());
  if (config.analyze_strategies) {
    const BackendDescriptor annotator_descriptor =
        config.annotator_backend.value_or(config.judge_backend);
    const PromptTemplate annotation_template = prompts.get("annotation");
    detail::parallel_for(results.size(), config.parallelism, [&](std::size_t i) {
      const SessionJobResult& result = results[i];
      if (result.aborted || !result.record) return;
      try {
        auto annotator = make_chat_backend(annotator_descriptor, Perspective::observer);
        strategy_slots[i] = annotate_strategies(*result.record, *annotator,
                                                annotation_template,
                                                annotator_descriptor.params);
      } catch (const Error&) {
        strategy_slots[i].clear();
      }
    });
  }

  std::vector<std::optional<CtrsReport>> ctrs_slots(results.size());
  if (config.analyze_ctrs) {
    const BackendDescriptor ctrs_descriptor =
        config.ctrs_judge_backend.value_or(config.judge_backend);
    detail::parallel_for(results.size(), config.parallelism, [&](std::size_t i) {
      const SessionJobResult& result = results[i];
      if (result.aborted || !result.record) return;
      try {
        auto judge = make_chat_backend(ctrs_descriptor, Perspective::observer);
        ctrs_slots[i] = score_ctrs(*result.record, *judge, prompts,
                                   ctrs_descriptor.params);
      } catch (const Error&) {
        ctrs_slots[i].reset();
      }
    });
  }

  // Aggregate per preset, in config preset order.
  auto embedder = make_embedding_backend(config.embedder_backend);
  nlohmann::json report;
  report["model"] = config.therapist_backend.params.model_name.empty()
                        ? "scripted"
                        : config.therapist_backend.params.model_name;
  report["sessions_per_cell"] = config.sessions_per_cell;
  nlohmann::json personas = nlohmann::json::array();
  for (const auto& p : scan.loaded) personas.push_back(p.profile.name);
  report["personas"] = personas;
  nlohmann::json persona_failures = nlohmann::json::array();
  for (const auto& f : scan.failures)
    persona_failures.push_back({{"file", f.file}, {"message", f.message}});
  report["persona_failures"] = persona_failures;

  BatchSummary summary;
  summary.persona_failures = scan.failures;

  nlohmann::json presets_json;
  for (const auto& label : config.presets) {
    std::vector<SessionRecord> records;
    std::vector<IdssEntry> idss_entries;
    std::vector<std::vector<std::pair<int, StrategyLabel>>> labeled_sessions;
    std::vector<const CtrsReport*> ctrs_reports;
    nlohmann::json session_rows = nlohmann::json::array();
    int aborted_here = 0;

    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& result = results[i];
      if (result.preset != label) continue;
      nlohmann::json row;
      row["file"] = std::filesystem::path(result.path).filename().string();
      row["persona"] = result.persona;
      row["session_index"] = result.session_index;
      if (result.aborted) {
        ++aborted_here;
        row["aborted"] = true;
        row["error"] = result.error;
      } else if (result.record) {
        const ExposureStatus exposure = exposure_status(result.record->final_diagram);
        row["termination"] = termination_name(result.record->termination);
        row["external_revealed"] = exposure.external_revealed;
        row["internal_revealed"] = exposure.internal_revealed;
        row["full_revealed"] = exposure.full_revealed;
        if (!idss_slots[i].extraction && !idss_slots[i].extraction_error.empty())
          row["extraction_error"] = idss_slots[i].extraction_error;
        records.push_back(*result.record);
        idss_entries.push_back(idss_slots[i]);
        if (config.analyze_strategies && !strategy_slots[i].empty())
          labeled_sessions.push_back(strategy_slots[i]);
        if (config.analyze_ctrs && ctrs_slots[i])
          ctrs_reports.push_back(&*ctrs_slots[i]);
      }
      session_rows.push_back(std::move(row));
    }

    // idss_entries hold pointers into local `records` copies? No: they
    // point at results[i].record, which outlives this loop.
    nlohmann::json preset_json;
    preset_json["session_count"] = static_cast<int>(records.size());
    preset_json["aborted"] = aborted_here;
    preset_json["sessions"] = session_rows;
    if (!records.empty()) {
      nlohmann::json cder;
      cder["external"] = compute_cder(records, DisclosureScope::external);
      cder["internal"] = compute_cder(records, DisclosureScope::internal);
      cder["full"] = compute_cder(records, DisclosureScope::full);
      preset_json["cder"] = cder;
      try {
        const IdssResult idss = compute_idss(idss_entries, *embedder,
                                             config.idss_threshold);
        nlohmann::json by_kind;
        for (const auto& [kind, value] : idss.by_kind) by_kind[kind_name(kind)] = value;
        nlohmann::json mean_cosine;
        for (const auto& [kind, value] : idss.mean_cosine)
          mean_cosine[kind_name(kind)] = value;
        preset_json["idss"] = {{"avg", idss.average},
                               {"by_kind", by_kind},
                               {"mean_cosine", mean_cosine},
                               {"session_count", idss.session_count},
                               {"excluded", idss.excluded},
                               {"threshold", config.idss_threshold}};
      } catch (const InputError& e) {
        preset_json["idss_error"] = e.what();
      }
      if (config.analyze_ctrs) {
        if (!ctrs_reports.empty()) {
          double sum = 0.0;
          int partial = 0;
          for (const CtrsReport* r : ctrs_reports) {
            sum += r->normalized;
            partial += r->partial ? 1 : 0;
          }
          preset_json["ctrs"] = {
              {"mean_normalized", sum / static_cast<double>(ctrs_reports.size())},
              {"sessions_scored", static_cast<int>(ctrs_reports.size())},
              {"partial_reports", partial}};
        } else {
          preset_json["ctrs_error"] = "no session produced a usable rubric report";
        }
      }
      if (config.analyze_strategies) {
        try {
          const StrategyDistribution dist = strategy_distribution(labeled_sessions);
          nlohmann::json frequencies;
          for (StrategyLabel l : kAllStrategies)
            frequencies[strategy_display_name(l)] = dist.frequencies.at(l);
          preset_json["strategies"] = {{"frequencies", frequencies},
                                       {"total_labeled", dist.total},
                                       {"unlabeled", dist.unlabeled_count}};
        } catch (const InputError& e) {
          preset_json["strategies_error"] = e.what();
        }
      }
    }
    presets_json[label] = std::move(preset_json);
  }
  report["presets"] = std::move(presets_json);

  // Cross-preset strategy similarity (client types = difficulty presets).
  if (config.analyze_strategies) {
    std::vector<std::pair<std::string, StrategyDistribution>> dists;
    for (const auto& label : config.presets) {
      std::vector<std::vector<std::pair<int, StrategyLabel>>> labeled_sessions;
      for (std::size_t i = 0; i < results.size(); ++i)
        if (results[i].preset == label && !strategy_slots[i].empty())
          labeled_sessions.push_back(strategy_slots[i]);
      if (labeled_sessions.empty()) continue;
      try {
        dists.emplace_back(label, strategy_distribution(labeled_sessions));
      } catch (const InputError&) {
      }
    }
    if (dists.size() >= 2) {
      const SimilarityMatrix matrix = distribution_similarity(dists);
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& row : matrix.values) rows.push_back(row);
      report["strategy_similarity"] = {{"keys", matrix.keys}, {"matrix", rows}};
    }
    // Plot-ready CSVs.
    {
      std::ofstream csv(out_dir / "strategy_distribution.csv");
      csv << "client_type";
      for (StrategyLabel l : kAllStrategies) csv << "," << strategy_display_name(l);
      csv << "\n";
      for (const auto& [label, dist] : dists) {
        csv << label;
        for (StrategyLabel l : kAllStrategies)
          csv << "," << detail::format_2dp(dist.frequencies.at(l) * 100.0);
        csv << "\n";
      }
    }
    if (dists.size() >= 2) {
      const SimilarityMatrix matrix = distribution_similarity(dists);
      std::ofstream csv(out_dir / "strategy_similarity.csv");
      csv << "client_type";
      for (const auto& key : matrix.keys) csv << "," << key;
      csv << "\n";
      for (std::size_t a = 0; a < matrix.keys.size(); ++a) {
        csv << matrix.keys[a];
        for (double v : matrix.values[a]) csv << "," << detail::format_2dp(v);
        csv << "\n";
      }
    }
  }

  for (const auto& result : results) {
    ++summary.sessions_run;
    if (result.aborted) ++summary.aborted;
  }
  report["aborted_sessions"] = summary.aborted;

  const std::filesystem::path report_path = out_dir / "report.json";
  {
    std::ofstream out(report_path);
    if (!out) throw InputError("cannot write report: " + report_path.string());
    out << report.dump(2) << "\n";
  }

  summary.report_path = report_path.string();
  summary.jobs = std::move(results);
  summary.report = std::move(report);
  summary.ok = summary.aborted == 0 && summary.persona_failures.empty();
  return summary;
}

// --- report rendering -----------------------------------------------------------

enum class ReportFormat { text, json, csv };

inline ReportFormat report_format_from(const std::string& name) {
  if (name == "text") return ReportFormat::text;
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw ConfigError("unknown report format: " + name);
}

namespace detail {

inline double json_number_or(const nlohmann::json& obj, const char* key, double fallback) {
  if (obj.contains(key) && obj[key].is_number()) return obj[key].get<double>();
  return fallback;
}

}  // namespace detail

// Renders the batch report in the three table layouts: disclosure-rate
// columns E/I/G, per-kind semantic-match columns Avg./RH/CB/IB/CS, and a
// one-line summary per preset. One row per therapist backend per preset.
inline std::string render_report(const std::string& output_dir, ReportFormat format) {
  const std::filesystem::path report_path =
      std::filesystem::path(output_dir) / "report.json";
  std::ifstream in(report_path);
  if (!in) throw InputError("no report.json in " + output_dir);
  nlohmann::json report;
  try {
    in >> report;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("report.json: invalid JSON: ") + e.what());
  }

  if (format == ReportFormat::json) return report.dump(2) + "\n";

  const std::string model = report.value("model", "scripted");
  const auto& presets = report.at("presets");

  const std::array<std::pair<ElementKind, const char*>, 4> kind_columns = {{
      {ElementKind::relevant_history, "RH"},
      {ElementKind::core_belief, "CB"},
      {ElementKind::intermediate_belief, "IB"},
      {ElementKind::coping_strategy, "CS"},
  }};

  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "Preset,Model,Avg.,RH,CB,IB,CS\n";
    for (const auto& [label, preset] : presets.items()) {
      out << label << "," << model;
      if (preset.contains("idss")) {
        const auto& idss = preset["idss"];
        out << "," << detail::format_2dp(idss.at("avg").get<double>());
        for (const auto& [kind, column] : kind_columns) {
          (void)column;
          out << ","
              << detail::format_2dp(idss.at("by_kind").at(kind_name(kind)).get<double>());
        }
      } else {
        out << ",-,-,-,-,-";
      }
      out << "\n";
    }
    return out.str();
  }

  bool first = true;
  for (const auto& [label, preset] : presets.items()) {
    if (!first) out << "\n";
    first = false;
    out << "== preset: " << label << " ==\n";
    out << "Sessions: " << preset.value("session_count", 0)
        << "  aborted: " << preset.value("aborted", 0) << "\n";

    if (preset.contains("cder")) {
      const auto& cder = preset["cder"];
      out << "Disclosure rate (Model E I G):\n"
          << model << " " << detail::format_2dp(cder.at("external").get<double>()) << " "
          << detail::format_2dp(cder.at("internal").get<double>()) << " "
          << detail::format_2dp(cder.at("full").get<double>()) << "\n";
    }
    if (preset.contains("idss")) {
      const auto& idss = preset["idss"];
      out << "Semantic match (Model Avg. RH CB IB CS):\n" << model;
      out << " " << detail::format_2dp(idss.at("avg").get<double>());
      for (const auto& [kind, column] : kind_columns) {
        (void)column;
        out << " "
            << detail::format_2dp(idss.at("by_kind").at(kind_name(kind)).get<double>());
      }
      out << "\n";
    }
    // One summary line per preset in CDER/IDSS/CTRS column order.
    {
      out << "Summary (Model CDER IDSS CTRS):\n" << model;
      out << " "
          << (preset.contains("cder")
                  ? detail::format_2dp(preset["cder"].at("full").get<double>())
                  : std::string("-"));
      out << " "
          << (preset.contains("idss")
                  ? detail::format_2dp(preset["idss"].at("avg").get<double>())
                  : std::string("-"));
      if (preset.contains("ctrs"))
        out << " "
            << detail::format_2dp(preset["ctrs"].at("mean_normalized").get<double>());
      else
        out << " -";
      out << "\n";
    }
  }
  return out.str();
}

// --- replay ------------------------------------------------------------------------

struct ReplayResult {
  std::string text;
  bool consistent = true;
  std::string violation;
};

// Human-readable dump of a persisted session: utterances interleaved
// with events in turn order, then the fold-vs-footer verification.
inline ReplayResult replay_session(const std::string& path) {
  detail::ParsedTranscript parsed = detail::parse_transcript_file(path);
  SessionRecord& record = parsed.record;
  record.final_diagram =
      fold_events(record.profile, record.config.preset, record.events);

  ReplayResult result;
  result.violation = detail::verify_against_footer(record, parsed.footer);
  result.consistent = result.violation.empty();

  std::ostringstream out;
  out << "session: " << record.profile_ref << " (preset "
      << record.config.preset.label << ", max_turns " << record.config.max_turns
      << ")\n";

  std::size_t ui = 0;
  std::size_t ei = 0;
  int max_turn = 0;
  for (const auto& u : record.transcript) max_turn = std::max(max_turn, u.turn_index);
  for (const auto& e : record.events) max_turn = std::max(max_turn, e.turn_index);
  for (int turn = 1; turn <= max_turn; ++turn) {
    out << "-- turn " << turn << "\n";
    while (ui < record.transcript.size() && record.transcript[ui].turn_index == turn) {
      const auto& u = record.transcript[ui++];
      out << (u.speaker == Speaker::therapist ? "Therapist: " : "Client:    ") << u.text
          << "\n";
    }
    while (ei < record.events.size() && record.events[ei].turn_index == turn) {
      const auto& e = record.events[ei++];
      out << "[event] " << event_kind_name(e.kind);
      if (e.kind == SessionEventKind::rapport_check ||
          e.kind == SessionEventKind::exploration_check) {
        out << " score=" << e.payload.value("score", 0) << " passed="
            << (e.payload.value("passed", false) ? "yes" : "no");
      } else if (e.kind == SessionEventKind::unmask_external) {
        out << " bundle=" << e.payload.value("bundle", 0);
      } else if (e.kind == SessionEventKind::check_skipped) {
        out << " check=" << e.payload.value("check", std::string("?"));
      } else if (e.kind == SessionEventKind::termination) {
        out << " reason=" << e.payload.value("reason", std::string("?"));
      }
      out << "\n";
    }
  }

  const ExposureStatus exposure = exposure_status(record.final_diagram);
  out << "-- footer\n"
      << "termination: " << termination_name(record.termination) << "\n"
      << "exposure: external=" << (exposure.external_revealed ? "yes" : "no")
      << " internal=" << (exposure.internal_revealed ? "yes" : "no")
      << " full=" << (exposure.full_revealed ? "yes" : "no") << "\n";
  if (result.consistent)
    out << "consistency: ok (event fold matches footer)\n";
  else
    out << "consistency: VIOLATION — " << result.violation << "\n";
  result.text = out.str();
  return result;
}

// --- calibration input ----------------------------------------------------------------

// Labeled-transcript file: a JSON array of
//   {"quality": "high"|"low", "dialogue": [{"speaker": "...", "text": "..."}]}.
inline std::vector<LabeledTranscript> load_labeled_transcripts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read labeled transcripts: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("labeled transcripts: invalid JSON: ") + e.what());
  }
  if (!doc.is_array() || doc.empty())
    throw InputError("labeled transcripts: expected a nonempty array");

  std::vector<LabeledTranscript> out;
  for (const auto& item : doc) {
    LabeledTranscript labeled;
    const std::string quality = item.at("quality").get<std::string>();
    if (quality != "high" && quality != "low")
      throw InputError("labeled transcripts: quality must be \"high\" or \"low\"");
    labeled.high_quality = quality == "high";
    int turn = 0;
    for (const auto& line : item.at("dialogue")) {
      const std::string speaker = line.at("speaker").get<std::string>();
      Utterance u;
      if (speaker == "therapist") {
        ++turn;
        u.speaker = Speaker::therapist;
      } else if (speaker == "client") {
        u.speaker = Speaker::client;
      } else {
        throw InputError("labeled transcripts: unknown speaker: " + speaker);
      }
      u.turn_index = std::max(1, turn);
      u.text = line.at("text").get<std::string>();
      u.ts = 0;
      labeled.transcript.push_back(std::move(u));
    }
    if (labeled.transcript.empty())
      throw InputError("labeled transcripts: empty dialogue");
    out.push_back(std::move(labeled));
  }
  return out;
}

struct CalibrationRun {
  CalibrationReport report;
  std::string text;  // rendered summary
};

// Wires judge_calibration from files/config: the judge backend and the
// default mediator prompts (or the configured library).
inline CalibrationRun run_calibration(const std::vector<LabeledTranscript>& labeled,
                                      const BackendDescriptor& judge_descriptor,
                                      const PromptLibrary& prompts) {
  auto judge = make_chat_backend(judge_descriptor, Perspective::observer);
  MediatorPolicy policy = make_mediator_policy(easy_preset(), prompts);
  policy.judge_params = judge_descriptor.params;
  const CalibrationReport report = judge_calibration(labeled, *judge, policy);

  std::ostringstream out;
  out << "calibration over " << labeled.size() << " labeled transcript(s)\n"
      << "script eval (rapport judge):     high " << detail::format_2dp(report.high_script_mean)
      << "  low " << detail::format_2dp(report.low_script_mean) << "  "
      << (report.script_pass ? "PASS" : "FAIL") << "\n"
      << "utterance eval (exploration):    high "
      << detail::format_2dp(report.high_utterance_mean) << "  low "
      << detail::format_2dp(report.low_utterance_mean) << "  "
      << (report.utterance_pass ? "PASS" : "FAIL") << "\n"
      << "excluded (judge failures): " << report.excluded << "\n"
      << "overall: " << (report.pass ? "PASS" : "FAIL") << "\n";
  return {report, out.str()};
}

// --- dry run -----------------------------------------------------------------------

// Builds every prompt the batch would send without calling any backend;
// returns a line per (persona, preset) cell.
inline std::string dry_run(const ExperimentConfig& config) {
  const PromptLibrary prompts = config.prompts_dir.empty()
                                    ? PromptLibrary::embedded()
                                    : PromptLibrary::load(config.prompts_dir);
  const PersonaScan scan = scan_personas(config.personas_dir);
  if (scan.loaded.empty())
    throw ConfigError("no loadable personas in " + config.personas_dir);

  std::ostringstream out;
  for (const auto& f : scan.failures)
    out << "persona " << f.file << ": FAILED (" << f.message << ")\n";
  for (const auto& persona : scan.loaded) {
    for (const auto& label : config.presets) {
      const DifficultyPreset preset = detail::preset_for(config, label);
      const SessionConfig sc = detail::session_config_for(config, preset, prompts, "");
      const CognitiveDiagram diagram = initialize_mask(persona.profile, preset);
      const auto client_prompt = build_client_prompt(
          persona.profile, diagram, sc.client_template, sc.closing_marker);
      const auto therapist_prompt =
          build_therapist_prompt(persona.profile, sc.therapist_template);
      out << persona.profile.name << " × " << label << ": client prompt "
          << client_prompt.front().content.size() << " chars, therapist prompt "
          << therapist_prompt.front().content.size() << " chars, "
          << config.sessions_per_cell << " session(s) planned\n";
    }
  }
  out << "dry run: no backend was called\n";
  return out.str();
}

}  // namespace delve
