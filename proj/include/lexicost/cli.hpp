#pragma once

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexicost/analytics.hpp"
#include "lexicost/combiner.hpp"
#include "lexicost/cost.hpp"
#include "lexicost/engine.hpp"
#include "lexicost/errors.hpp"
#include "lexicost/kb.hpp"
#include "lexicost/suite.hpp"

namespace lexicost {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitResource = 3;

namespace detail {

using nlohmann::json;

inline double round4(double v) { return std::round(v * 1e4) / 1e4; }

inline json to_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

inline json to_json(const MetricReport& m) {
  json flags = json::array();
  if (m.precision_undefined) flags.push_back("precision_undefined");
  if (m.balanced_degenerate) flags.push_back("balanced_degenerate");
  if (m.recall_undefined) flags.push_back("recall_undefined");
  return {{"accuracy", round4(m.accuracy)},
          {"balanced_accuracy", round4(m.balanced_accuracy)},
          {"precision", round4(m.precision)},
          {"recall", round4(m.recall)},
          {"flags", flags}};
}

inline json to_json(const MeanStderr& m) {
  return {{"mean", round4(m.mean)}, {"stderr", round4(m.std_error)}};
}

inline json optional_json(const std::optional<double>& v, bool round) {
  if (!v) return nullptr;
  return round ? round4(*v) : *v;
}

inline std::string slurp(const std::string& path) { return read_file(path); }

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + p.string());
  out << text;
}

inline json analysis_json(const Analysis& a) {
  json j;
  j["cost_functions"] = a.cost_fns;
  j["domains"] = a.domains;
  j["rows_used"] = a.rows_used;
  j["rows_skipped"] = a.rows_skipped;
  j["warnings"] = a.warnings;

  json aggs = json::array();
  for (const auto& c : a.aggregates) {
    aggs.push_back({{"cost_fn", c.cost_fn},
                    {"domain", c.agg.domain},
                    {"tasks", c.agg.per_task.size()},
                    {"accuracy", to_json(c.agg.accuracy)},
                    {"balanced_accuracy", to_json(c.agg.balanced_accuracy)},
                    {"precision", to_json(c.agg.precision)},
                    {"recall", to_json(c.agg.recall)},
                    {"precision_undefined_tasks", c.precision_undefined},
                    {"balanced_degenerate_tasks", c.balanced_degenerate}});
  }
  j["aggregates"] = aggs;

  json overall = json::object();
  for (std::size_t i = 0; i < a.cost_fns.size(); ++i) {
    json m;
    for (std::size_t k = 0; k < 4; ++k) m[kMetricNames[k]] = round4(a.overall[i][k]);
    overall[a.cost_fns[i]] = m;
  }
  j["overall"] = overall;

  if (a.ranks) {
    json r;
    r["tie_rule"] = a.options.tie_rule == TieRule::dense ? "dense" : "standard";
    r["decimals"] = a.options.decimals;
    for (auto [name, counts] : {std::pair{"rank1", &a.ranks->rank1}, std::pair{"rank2", &a.ranks->rank2},
                                std::pair{"rank3", &a.ranks->rank3}}) {
      json row = json::object();
      for (std::size_t i = 0; i < a.cost_fns.size(); ++i) row[a.cost_fns[i]] = (*counts)[i];
      r[name] = row;
    }
    j["ranks"] = r;
  } else {
    j["ranks"] = nullptr;
  }

  json corr = json::object();
  for (std::size_t i = 0; i < a.cost_fns.size(); ++i) {
    json row = json::object();
    for (std::size_t k = 0; k < a.cost_fns.size(); ++k)
      row[a.cost_fns[k]] = optional_json(a.pearson[i][k], true);
    corr[a.cost_fns[i]] = row;
  }
  j["pearson"] = corr;

  json wil = json::object();
  for (std::size_t m = 0; m < 4; ++m) {
    json table = json::object();
    for (std::size_t i = 0; i < a.cost_fns.size(); ++i) {
      json row = json::object();
      for (std::size_t k = 0; k < a.cost_fns.size(); ++k)
        row[a.cost_fns[k]] = optional_json(a.wilcoxon[m][i][k], false);
      table[a.cost_fns[i]] = row;
    }
    wil[kMetricNames[m]] = table;
  }
  j["wilcoxon"] = wil;
  return j;
}

inline std::string cell(const std::optional<double>& v, int decimals) {
  return v ? fixed(*v, decimals) : std::string();
}

inline void write_analysis_csvs(const Analysis& a, const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream aggs;
  aggs << "cost_fn,domain,tasks";
  for (const char* m : kMetricNames) aggs << ',' << m << "_mean," << m << "_stderr";
  aggs << "\n";
  for (const auto& c : a.aggregates) {
    aggs << csv_field(c.cost_fn) << ',' << csv_field(c.agg.domain) << ',' << c.agg.per_task.size();
    for (auto field : kMetricFields)
      aggs << ',' << fixed((c.agg.*field).mean, 4) << ',' << fixed((c.agg.*field).std_error, 4);
    aggs << "\n";
  }
  write_text(dir / "aggregates.csv", aggs.str());

  std::ostringstream overall;
  overall << "cost_fn,accuracy,balanced_accuracy,precision,recall\n";
  for (std::size_t i = 0; i < a.cost_fns.size(); ++i) {
    overall << csv_field(a.cost_fns[i]);
    for (double v : a.overall[i]) overall << ',' << fixed(v, 4);
    overall << "\n";
  }
  write_text(dir / "overall.csv", overall.str());

  if (a.ranks) {
    std::ostringstream ranks;
    ranks << "cost_fn,rank1,rank2,rank3\n";
    for (std::size_t i = 0; i < a.cost_fns.size(); ++i)
      ranks << csv_field(a.cost_fns[i]) << ',' << a.ranks->rank1[i] << ',' << a.ranks->rank2[i]
            << ',' << a.ranks->rank3[i] << "\n";
    write_text(dir / "ranks.csv", ranks.str());
  }

  std::ostringstream corr;
  corr << "cost_fn";
  for (const auto& c : a.cost_fns) corr << ',' << csv_field(c);
  corr << "\n";
  for (std::size_t i = 0; i < a.cost_fns.size(); ++i) {
    corr << csv_field(a.cost_fns[i]);
    for (std::size_t k = 0; k < a.cost_fns.size(); ++k) corr << ',' << cell(a.pearson[i][k], 4);
    corr << "\n";
  }
  write_text(dir / "correlation.csv", corr.str());

  std::ostringstream wil;
  wil << "metric,cost_a,cost_b,p_value\n";
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t i = 0; i < a.cost_fns.size(); ++i)
      for (std::size_t k = i + 1; k < a.cost_fns.size(); ++k)
        wil << kMetricNames[m] << ',' << csv_field(a.cost_fns[i]) << ',' << csv_field(a.cost_fns[k])
            << ',' << cell(a.wilcoxon[m][i][k], 6) << "\n";
  write_text(dir / "wilcoxon.csv", wil.str());

  write_text(dir / "analysis.json", analysis_json(a).dump(2) + "\n");
}

inline std::vector<CostSpec> parse_cost_list(const std::vector<std::string>& names) {
  std::vector<CostSpec> out;
  for (const auto& n : names) {
    if (n == "all") {
      auto all = costs::all();
      out.insert(out.end(), all.begin(), all.end());
    } else {
      out.push_back(parse_cost_spec(n));
    }
  }
  return out;
}

struct LearnArgs {
  std::string bk, exs, bias, cost = "errorsize";
  std::string test_exs, dump_combine, format = "json";
  std::optional<std::size_t> max_size, candidate_cap;
  std::size_t max_derived = EvalLimits{}.max_derived;
};

inline int cmd_learn(const LearnArgs& a, std::ostream& out) {
  auto spec = parse_cost_spec(a.cost);
  auto task = parse_task(slurp(a.bk), slurp(a.exs), slurp(a.bias));
  std::optional<Examples> test;
  if (!a.test_exs.empty()) test = parse_examples(slurp(a.test_exs));

  LearnOptions o;
  o.spec = spec;
  o.max_size = a.max_size;
  o.candidate_cap = a.candidate_cap;
  o.eval_limits.max_derived = a.max_derived;
  std::optional<CombineProblem> last_problem;
  if (!a.dump_combine.empty()) o.on_combine = [&](const CombineProblem& p) { last_problem = p; };
  auto r = learn(task, o);

  if (!a.dump_combine.empty()) {
    std::ostringstream dump;
    if (last_problem) {
      write_combine_problem(dump, *last_problem);
    } else {
      CombineProblem empty{{}, task.pos.size(), task.neg.size(), spec, std::nullopt, std::nullopt};
      write_combine_problem(dump, empty);
    }
    write_text(a.dump_combine, dump.str());
  }

  std::optional<Confusion> test_conf;
  if (test) test_conf = evaluate_on_test(r, task, test->pos, test->neg, o.eval_limits);

  std::vector<std::string> rules;
  for (const auto& rule : r.best.rules()) rules.push_back(render_rule(rule));
  const char* proof = r.proof == Proof::optimal ? "optimal" : "cap_exhausted";

  if (a.format == "text") {
    out << "cost function: " << format_cost_spec(spec) << "\n";
    out << "cost: " << format_cost(r.cost) << " (" << proof << ")\n";
    out << "hypothesis:" << (rules.empty() ? " (empty)" : "") << "\n";
    for (const auto& s : rules) out << "  " << s << "\n";
    out << "train: tp=" << r.train_conf.tp << " fp=" << r.train_conf.fp << " tn=" << r.train_conf.tn
        << " fn=" << r.train_conf.fn << "\n";
    if (test_conf && test_conf->tp + test_conf->fp + test_conf->tn + test_conf->fn > 0) {
      auto m = metrics(*test_conf);
      out << "test: accuracy=" << fixed(m.accuracy, 4) << " balanced=" << fixed(m.balanced_accuracy, 4)
          << " precision=" << fixed(m.precision, 4) << " recall=" << fixed(m.recall, 4) << "\n";
    }
    out << "generated=" << r.stats.generated << " promising=" << r.stats.promising
        << " combine_calls=" << r.stats.combine_calls << " pruned=" << r.stats.pruned << "\n";
    return kExitOk;
  }

  json j;
  j["cost_fn"] = format_cost_spec(spec);
  j["hypothesis"] = rules;
  j["size"] = program_size(r.best);
  j["cost"] = r.cost;
  j["train"] = to_json(r.train_conf);
  if (test_conf) {
    json t = to_json(*test_conf);
    if (test_conf->tp + test_conf->fp + test_conf->tn + test_conf->fn > 0)
      t["metrics"] = to_json(metrics(*test_conf));
    j["test"] = t;
  }
  j["stats"] = {{"generated", r.stats.generated},
                {"tested", r.stats.tested},
                {"promising", r.stats.promising},
                {"combine_calls", r.stats.combine_calls},
                {"pruned", r.stats.pruned}};
  j["proof"] = proof;
  out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. Returns the exit
/// status: 0 success, 2 usage or input error, 3 resource limit.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lexicographic-cost rule learner and benchmark tools", "lexicost"};
  app.require_subcommand(1);

  detail::LearnArgs la;
  auto* learn_cmd = app.add_subcommand("learn", "Learn one task");
  learn_cmd->add_option("--bk", la.bk, "Background facts file")->required();
  learn_cmd->add_option("--exs", la.exs, "Examples file")->required();
  learn_cmd->add_option("--bias", la.bias, "Bias file")->required();
  learn_cmd->add_option("--cost", la.cost, "Cost function name or custom:<levels>")->required();
  learn_cmd->add_option("--test-exs", la.test_exs, "Held-out examples file");
  learn_cmd->add_option("--max-size", la.max_size, "Largest program size to search");
  learn_cmd->add_option("--candidate-cap", la.candidate_cap, "Stop after this many candidates");
  learn_cmd->add_option("--max-derived", la.max_derived, "Derived-atom cap per evaluation")
      ->check(CLI::PositiveNumber);
  learn_cmd->add_option("--dump-combine", la.dump_combine, "Write the last combine problem here");
  learn_cmd->add_option("--format", la.format, "json or text")
      ->check(CLI::IsMember({"json", "text"}));

  SuiteConfig sc;
  std::vector<std::string> bench_costs{"all"};
  std::string bench_output;
  std::optional<double> bench_split;
  bool no_timing = false;
  auto* bench_cmd = app.add_subcommand("bench", "Run every task under every cost function");
  bench_cmd->add_option("root", sc.root_dir, "Directory of task directories")->required();
  bench_cmd->add_option("--cost", bench_costs, "Cost functions (default: all)")->delimiter(',');
  bench_cmd->add_option("--repeats", sc.repeats, "Repeats per task")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--split", bench_split, "Held-out fraction for a stratified split");
  bench_cmd->add_option("--seed", sc.seed, "Split seed");
  bench_cmd->add_option("--output,-o", bench_output, "Results CSV (default: stdout)");
  bench_cmd->add_option("--threads", sc.threads, "Worker threads (0: all cores)");
  bench_cmd->add_option("--max-size", sc.max_size, "Largest program size to search");
  bench_cmd->add_option("--candidate-cap", sc.candidate_cap, "Stop each run after this many candidates");
  bench_cmd->add_option("--max-derived", sc.eval_limits.max_derived, "Derived-atom cap per evaluation")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--no-timing", no_timing, "Write runtime_ms as 0 for reproducible output");

  std::string results_path, out_dir, tie_rule = "dense";
  AnalyzeOptions ao;
  auto* analyze_cmd = app.add_subcommand("analyze", "Aggregate a results CSV");
  analyze_cmd->add_option("results", results_path, "Results CSV")->required();
  analyze_cmd->add_option("--out-dir", out_dir, "Also write CSV tables and analysis.json here");
  analyze_cmd->add_option("--tie-rule", tie_rule, "dense or standard")
      ->check(CLI::IsMember({"dense", "standard"}));
  analyze_cmd->add_option("--decimals", ao.decimals, "Rounding before ranking")
      ->check(CLI::Range(0, 12));

  std::string dump_path, combine_cost;
  bool brute = false;
  auto* combine_cmd = app.add_subcommand("combine", "Solve a dumped combine problem");
  combine_cmd->add_option("problem", dump_path, "Combine dump file")->required();
  combine_cmd->add_option("--cost", combine_cost, "Override the dump's cost function");
  combine_cmd->add_flag("--brute-force", brute, "Enumerate all subsets instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*learn_cmd) return detail::cmd_learn(la, out);

    if (*bench_cmd) {
      sc.cost_fns = detail::parse_cost_list(bench_costs);
      sc.split = bench_split;
      sc.timing = !no_timing;
      auto rows = run_suite(sc);
      if (bench_output.empty()) {
        write_results_csv(out, rows);
      } else {
        std::ostringstream csv;
        write_results_csv(csv, rows);
        detail::write_text(bench_output, csv.str());
      }
      return kExitOk;
    }

    if (*analyze_cmd) {
      ao.tie_rule = tie_rule == "standard" ? TieRule::standard : TieRule::dense;
      std::ifstream in(results_path, std::ios::binary);
      if (!in) throw std::ios_base::failure("cannot read " + results_path);
      auto a = analyze(read_results_csv(in), ao);
      if (!out_dir.empty()) detail::write_analysis_csvs(a, out_dir);
      out << detail::analysis_json(a).dump(2) << "\n";
      return kExitOk;
    }

    if (*combine_cmd) {
      std::ifstream in(dump_path, std::ios::binary);
      if (!in) throw std::ios_base::failure("cannot read " + dump_path);
      auto p = read_combine_problem(in);
      if (!combine_cost.empty()) p.spec = parse_cost_spec(combine_cost);
      auto s = brute ? brute_force_combination(p) : optimal_combination(p);
      nlohmann::json j{{"selected", s.selected},
                       {"cost", s.cost},
                       {"confusion", detail::to_json(s.conf)},
                       {"size", s.total_size}};
      out << j.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ResourceLimit& e) {
    err << "resource limit: " << e.what() << "\n";
    return kExitResource;
  } catch (const ParseError& e) {
    err << e.what() << "\n";
    return kExitInput;
  } catch (const SchemaError& e) {
    err << "SchemaError: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::ios_base::failure& e) {
    err << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace lexicost
