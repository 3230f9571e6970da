#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "lexicost/analytics.hpp"
#include "lexicost/cost.hpp"
#include "lexicost/engine.hpp"
#include "lexicost/errors.hpp"
#include "lexicost/kb.hpp"

// Benchmark harness: runs task directories under several cost functions,
// writes one CSV row per run, and turns such CSVs into the study's tables.

namespace lexicost {

namespace fs = std::filesystem;

inline constexpr const char* kBkFile = "bk.datalog";
inline constexpr const char* kExsFile = "exs.datalog";
inline constexpr const char* kBiasFile = "bias.txt";
inline constexpr const char* kTestExsFile = "test_exs.datalog";

struct TaskDir {
  std::string domain;
  std::string name;
  fs::path dir;
};

namespace detail {

inline bool looks_like_task(const fs::path& dir) {
  for (const char* f : {kBkFile, kExsFile, kBiasFile})
    if (fs::exists(dir / f)) return true;
  return false;
}

inline std::vector<fs::path> sorted_subdirs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// `root/<domain>/<task>/` or, for a directory that itself holds task files,
/// `root/<task>/` with the task name doubling as its domain.
inline std::vector<TaskDir> discover_tasks(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::ios_base::failure("not a directory: " + root.string());
  std::vector<TaskDir> out;
  for (const auto& d : detail::sorted_subdirs(root)) {
    const auto dname = d.filename().string();
    if (detail::looks_like_task(d)) {
      out.push_back({dname, dname, d});
      continue;
    }
    for (const auto& t : detail::sorted_subdirs(d)) out.push_back({dname, t.filename().string(), t});
  }
  return out;
}

/// Task triplet plus optional held-out examples.
struct LoadedTask {
  Task task;
  std::optional<Examples> test;
};

inline LoadedTask load_task_dir(const fs::path& dir) {
  auto bk = detail::read_file(dir / kBkFile);
  auto exs = detail::read_file(dir / kExsFile);
  auto bias = detail::read_file(dir / kBiasFile);
  LoadedTask out{parse_task(bk, exs, bias), std::nullopt};
  if (fs::exists(dir / kTestExsFile)) out.test = parse_examples(detail::read_file(dir / kTestExsFile));
  return out;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// std::shuffle's draw pattern is implementation-defined; this one is not.
template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace detail

inline std::uint64_t split_seed(std::uint64_t seed, std::string_view domain, std::string_view task,
                                std::size_t repeat) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ detail::fnv1a(domain));
  h = detail::splitmix64(h ^ detail::fnv1a(task));
  return detail::splitmix64(h ^ repeat);
}

struct Split {
  Examples train;
  Examples test;
};

/// Stratified split: `test_fraction` of each class goes to test, rounded to
/// nearest, keeping at least one training positive.
inline Split stratified_split(const Examples& exs, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1))
    throw std::invalid_argument("split fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  Split out;
  auto cut = [&](std::vector<Atom> xs, std::vector<Atom>& train, std::vector<Atom>& test,
                 std::size_t min_train) {
    detail::shuffle(xs, rng);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(xs.size())));
    if (xs.size() - n_test < min_train) n_test = xs.size() < min_train ? 0 : xs.size() - min_train;
    test.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.assign(xs.begin() + static_cast<std::ptrdiff_t>(n_test), xs.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
  };
  cut(exs.pos, out.train.pos, out.test.pos, 1);
  cut(exs.neg, out.train.neg, out.test.neg, 0);
  return out;
}

struct SuiteConfig {
  fs::path root_dir;
  std::vector<CostSpec> cost_fns = costs::all();
  std::size_t repeats = 3;
  std::optional<double> split;  // test fraction
  std::uint64_t seed = 0;
  bool timing = true;           // false writes runtime_ms = 0
  std::size_t threads = 0;      // 0: hardware concurrency, capped by LEXICOST_THREADS
  std::optional<std::size_t> max_size;
  std::optional<std::size_t> candidate_cap;
  EvalLimits eval_limits{};
};

/// One results-CSV row. The confusion is measured on the held-out examples
/// (or on the training examples when the task has none).
struct ResultRow {
  std::string domain;
  std::string task;
  std::size_t repeat = 0;
  std::string cost_fn;
  Confusion conf;
  std::size_t size = 0;
  CostVector cost;
  double runtime_ms = 0;
  std::string status = "ok";
  bool excluded = false;
};

inline std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested ? requested : std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LEXICOST_THREADS")) {
    char* end = nullptr;
    auto cap = std::strtoull(env, &end, 10);
    if (end != env && cap > 0) n = std::min<std::size_t>(n, cap);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

inline std::vector<ResultRow> run_suite(const SuiteConfig& cfg) {
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  if (cfg.split && !(*cfg.split > 0 && *cfg.split < 1))
    throw std::invalid_argument("split fraction must lie in (0, 1)");
  if (cfg.cost_fns.empty()) throw std::invalid_argument("no cost functions given");

  const auto dirs = discover_tasks(cfg.root_dir);

  struct Loaded {
    std::optional<LoadedTask> task;
    std::string status;
  };
  std::vector<Loaded> loaded(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    try {
      loaded[i].task = load_task_dir(dirs[i].dir);
      loaded[i].status = "ok";
    } catch (const std::ios_base::failure&) {
      loaded[i].status = "io_error";
    } catch (const ParseError&) {
      loaded[i].status = "parse_error";
    } catch (const std::exception&) {
      loaded[i].status = "error";
    }
  }

  const std::size_t n_cost = cfg.cost_fns.size();
  const std::size_t jobs = dirs.size() * cfg.repeats * n_cost;
  std::vector<ResultRow> rows(jobs);

  auto run_job = [&](std::size_t j) {
    const std::size_t ti = j / (cfg.repeats * n_cost);
    const std::size_t rep = j / n_cost % cfg.repeats;
    const auto& spec = cfg.cost_fns[j % n_cost];
    ResultRow& row = rows[j];
    row.domain = dirs[ti].domain;
    row.task = dirs[ti].name;
    row.repeat = rep;
    row.cost_fn = format_cost_spec(spec);
    row.status = loaded[ti].status;
    if (!loaded[ti].task) return;

    const auto& lt = *loaded[ti].task;
    const auto start = std::chrono::steady_clock::now();
    try {
      Task train = lt.task;
      Examples test{lt.task.pos, lt.task.neg};
      if (cfg.split) {
        auto s = stratified_split({lt.task.pos, lt.task.neg}, *cfg.split,
                                  split_seed(cfg.seed, row.domain, row.task, rep));
        train.pos = std::move(s.train.pos);
        train.neg = std::move(s.train.neg);
        test = std::move(s.test);
      } else if (lt.test) {
        test = *lt.test;
      }
      LearnOptions o;
      o.spec = spec;
      o.max_size = cfg.max_size;
      o.candidate_cap = cfg.candidate_cap;
      o.eval_limits = cfg.eval_limits;
      auto r = learn(train, o);
      row.conf = evaluate_on_test(r, train, test.pos, test.neg, cfg.eval_limits);
      row.size = program_size(r.best);
      row.cost = r.cost;
      row.status = "ok";
    } catch (const ResourceLimit&) {
      row.status = "resource_limit";
    } catch (const ParseError&) {
      row.status = "parse_error";
    } catch (const std::exception&) {
      row.status = "error";
    }
    if (cfg.timing)
      row.runtime_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  const std::size_t workers = worker_count(cfg.threads, jobs);
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs;) run_job(j);
      });
    for (auto& t : pool) t.join();
  }

  // A task is excluded when no cost function learned a non-empty program.
  std::map<std::pair<std::string, std::string>, bool> learned_any;
  for (const auto& r : rows) {
    auto& flag = learned_any[{r.domain, r.task}];
    flag = flag || (r.status == "ok" && r.size > 0);
  }
  for (auto& r : rows) r.excluded = !learned_any[{r.domain, r.task}];

  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.domain, a.task, a.repeat, a.cost_fn) <
           std::tie(b.domain, b.task, b.repeat, b.cost_fn);
  });
  return rows;
}

// ---- results CSV --------------------------------------------------------

inline constexpr const char* kResultsHeader =
    "domain,task,repeat,cost_fn,tp,fp,tn,fn,size,cost_vector,runtime_ms,status,excluded";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw SchemaError("line " + std::to_string(lineno) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

inline CostVector parse_cost_vector(const std::string& s) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') throw std::invalid_argument(s);
  CostVector v;
  std::string body = s.substr(1, s.size() - 2);
  if (body.empty()) return v;
  std::istringstream in(body);
  for (std::string part; std::getline(in, part, ',');) {
    std::size_t used = 0;
    v.push_back(std::stoll(part, &used));
    if (used != part.size()) throw std::invalid_argument(s);
  }
  return v;
}

inline std::size_t parse_count_field(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument(s);
  return std::stoull(s);
}

}  // namespace detail

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << "\n";
  for (const auto& r : rows) {
    out << detail::csv_field(r.domain) << ',' << detail::csv_field(r.task) << ',' << r.repeat << ','
        << detail::csv_field(r.cost_fn) << ',' << r.conf.tp << ',' << r.conf.fp << ',' << r.conf.tn
        << ',' << r.conf.fn << ',' << r.size << ",\"" << format_cost(r.cost) << "\","
        << detail::fixed(r.runtime_ms, 3) << ',' << r.status << ',' << (r.excluded ? 1 : 0) << "\n";
  }
}

/// Reads a results CSV. Columns are located by header name; `status` and
/// `excluded` may be absent (defaulting to ok / 0).
inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = detail::split_csv_line(line, lineno);
    break;
  }
  if (header.empty()) throw SchemaError("results CSV is empty");

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  const char* required[] = {"domain", "task", "repeat", "cost_fn", "tp", "fp", "tn", "fn",
                            "size", "cost_vector", "runtime_ms"};
  for (const char* name : required)
    if (!col.count(name)) throw SchemaError(std::string("results CSV lacks column '") + name + "'");

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = detail::split_csv_line(line, lineno);
    if (f.size() != header.size())
      throw SchemaError("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    auto at = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    ResultRow r;
    try {
      r.domain = at("domain");
      r.task = at("task");
      r.repeat = detail::parse_count_field(at("repeat"));
      r.cost_fn = at("cost_fn");
      r.conf.tp = detail::parse_count_field(at("tp"));
      r.conf.fp = detail::parse_count_field(at("fp"));
      r.conf.tn = detail::parse_count_field(at("tn"));
      r.conf.fn = detail::parse_count_field(at("fn"));
      r.size = detail::parse_count_field(at("size"));
      r.cost = detail::parse_cost_vector(at("cost_vector"));
      std::size_t used = 0;
      r.runtime_ms = std::stod(at("runtime_ms"), &used);
      if (used != at("runtime_ms").size()) throw std::invalid_argument("runtime_ms");
      if (col.count("status")) r.status = at("status");
      if (col.count("excluded")) r.excluded = detail::parse_count_field(at("excluded")) != 0;
    } catch (const std::exception& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": bad value (" + e.what() + ")");
    }
    if (r.domain.empty() || r.cost_fn.empty())
      throw SchemaError("line " + std::to_string(lineno) + ": empty domain or cost_fn");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw SchemaError("results CSV has no data rows");
  return rows;
}

// ---- analysis -----------------------------------------------------------

struct AnalyzeOptions {
  int decimals = 6;
  TieRule tie_rule = TieRule::dense;
};

struct CostDomainAggregate {
  std::string cost_fn;
  DomainAggregate agg;
  std::size_t precision_undefined = 0;  // tasks whose averaged report carried the flag
  std::size_t balanced_degenerate = 0;
};

inline constexpr const char* kMetricNames[] = {"accuracy", "balanced_accuracy", "precision", "recall"};

struct Analysis {
  std::vector<std::string> cost_fns;  // order of first appearance
  std::vector<std::string> domains;   // sorted; only domains every cost function covers
  std::vector<CostDomainAggregate> aggregates;
  // overall[cost][metric] = mean over domains of the domain means
  std::vector<std::array<double, 4>> overall;
  std::optional<RankCounts> ranks;
  std::vector<std::vector<std::optional<double>>> pearson;  // on domain-mean accuracy
  // wilcoxon[metric][i][j] = p for cost i vs cost j
  std::array<std::vector<std::vector<std::optional<double>>>, 4> wilcoxon;
  std::size_t rows_used = 0;
  std::size_t rows_skipped = 0;
  std::vector<std::string> warnings;
  AnalyzeOptions options;
};

namespace detail {

inline constexpr MeanStderr DomainAggregate::*kMetricFields[] = {
    &DomainAggregate::accuracy, &DomainAggregate::balanced_accuracy, &DomainAggregate::precision,
    &DomainAggregate::recall};

}  // namespace detail

/// Per-task reports average the repeats; domains aggregate tasks; overall
/// figures average domains. Rows that failed or were excluded are skipped.
inline Analysis analyze(const std::vector<ResultRow>& rows, AnalyzeOptions opts = {}) {
  if (rows.empty()) throw SchemaError("no result rows");
  Analysis out;
  out.options = opts;

  // cost -> domain -> task -> reports over repeats
  std::map<std::string, std::map<std::string, std::map<std::string, std::vector<MetricReport>>>> by;
  for (const auto& r : rows) {
    if (std::find(out.cost_fns.begin(), out.cost_fns.end(), r.cost_fn) == out.cost_fns.end())
      out.cost_fns.push_back(r.cost_fn);
    if (r.status != "ok" || r.excluded || r.conf.tp + r.conf.fp + r.conf.tn + r.conf.fn == 0) {
      ++out.rows_skipped;
      continue;
    }
    by[r.cost_fn][r.domain][r.task].push_back(metrics(r.conf));
    ++out.rows_used;
  }
  if (out.rows_used == 0) throw SchemaError("no usable result rows (all failed or excluded)");

  std::set<std::string> all_domains;
  for (const auto& [c, doms] : by)
    for (const auto& [d, _] : doms) all_domains.insert(d);
  for (const auto& d : all_domains) {
    bool everywhere = std::all_of(out.cost_fns.begin(), out.cost_fns.end(),
                                  [&](const std::string& c) { return by[c].count(d) > 0; });
    if (everywhere) out.domains.push_back(d);
    else out.warnings.push_back("domain '" + d + "' lacks results for some cost function; left out of cross-function tables");
  }

  // domain_means[metric][cost][domain index]
  const std::size_t nc = out.cost_fns.size(), nd = out.domains.size();
  std::array<std::vector<std::vector<double>>, 4> domain_means;
  for (auto& m : domain_means) m.assign(nc, std::vector<double>(nd, 0.0));
  out.overall.assign(nc, {0, 0, 0, 0});

  for (std::size_t ci = 0; ci < nc; ++ci) {
    const auto& c = out.cost_fns[ci];
    std::array<std::vector<double>, 4> per_domain;
    for (const auto& [d, tasks] : by[c]) {
      std::vector<MetricReport> per_task;
      CostDomainAggregate cda;
      cda.cost_fn = c;
      for (const auto& [t, reps] : tasks) {
        MetricReport avg;
        for (const auto& m : reps) {
          avg.accuracy += m.accuracy / static_cast<double>(reps.size());
          avg.balanced_accuracy += m.balanced_accuracy / static_cast<double>(reps.size());
          avg.precision += m.precision / static_cast<double>(reps.size());
          avg.recall += m.recall / static_cast<double>(reps.size());
          avg.precision_undefined = avg.precision_undefined || m.precision_undefined;
          avg.balanced_degenerate = avg.balanced_degenerate || m.balanced_degenerate;
          avg.recall_undefined = avg.recall_undefined || m.recall_undefined;
        }
        cda.precision_undefined += avg.precision_undefined;
        cda.balanced_degenerate += avg.balanced_degenerate;
        per_task.push_back(avg);
      }
      cda.agg = aggregate_domain(per_task, d);
      auto it = std::find(out.domains.begin(), out.domains.end(), d);
      for (std::size_t k = 0; k < 4; ++k) {
        const double v = (cda.agg.*detail::kMetricFields[k]).mean;
        per_domain[k].push_back(v);
        if (it != out.domains.end())
          domain_means[k][ci][static_cast<std::size_t>(it - out.domains.begin())] = v;
      }
      out.aggregates.push_back(std::move(cda));
    }
    for (std::size_t k = 0; k < 4; ++k) out.overall[ci][k] = mean_stderr(per_domain[k]).mean;
  }

  if (nd > 0) out.ranks = rank_table(domain_means[0], opts.decimals, opts.tie_rule);

  out.pearson.assign(nc, std::vector<std::optional<double>>(nc));
  for (auto& w : out.wilcoxon) w.assign(nc, std::vector<std::optional<double>>(nc));
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      try {
        out.pearson[i][j] = pearson(domain_means[0][i], domain_means[0][j]);
      } catch (const StatsError&) {
      }
      for (std::size_t k = 0; k < 4; ++k) {
        try {
          out.wilcoxon[k][i][j] = wilcoxon_signed_rank(domain_means[k][i], domain_means[k][j]).p_value;
        } catch (const StatsError&) {
        }
      }
    }
  }
  return out;
}

}  // namespace lexicost
