// disarm: check rule files, query a theory, run the provider-selection simulation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "disarm/corpus.hpp"
#include "disarm/dposl.hpp"
#include "disarm/engine.hpp"
#include "disarm/testbed.hpp"

namespace {

namespace fs = std::filesystem;
using namespace disarm;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

// Validation failures (bad files, bad config) map to kInvalid.
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

SourceProgram parse_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_program(text, ParseOptions{false});
  } catch (const ParseError& e) {
    throw InvalidInput(path + ":" + e.what());
  }
}

// ---- check -----------------------------------------------------------------

struct CheckArgs {
  std::vector<std::string> files;
  bool corpus = false;
};

// Static checks on an assembled theory; returns the diagnostic or "".
std::string static_problem(const SourceProgram& program) {
  try {
    Engine engine(program);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

int cmd_check(const CheckArgs& args) {
  if (args.files.empty() && !args.corpus) {
    std::cerr << "check: no rule files given (use --rules or --corpus)\n";
    return kInvalid;
  }
  bool clean = true;
  if (args.corpus) {
    for (const auto& c : corpus::compositions()) {
      SourceProgram merged;
      std::string problem;
      for (const auto& f : c.files) {
        try {
          merged.append(parse_program(corpus::text(f), ParseOptions{false}));
        } catch (const ParseError& e) {
          problem = f + ":" + e.what();
          break;
        }
      }
      if (problem.empty()) problem = static_problem(merged);
      if (problem.empty()) {
        std::cout << "corpus " << c.name << ": ok\n";
      } else {
        std::cout << "corpus " << c.name << ": " << problem << '\n';
        clean = false;
      }
    }
  }
  if (!args.files.empty()) {
    SourceProgram merged;
    bool parsed = true;
    for (const auto& path : args.files) {
      std::string text;
      try {
        text = read_file(path);
      } catch (const InvalidInput& e) {
        std::cout << path << ": " << e.what() << '\n';
        parsed = clean = false;
        continue;
      }
      try {
        merged.append(parse_program(text, ParseOptions{false}));
        std::cout << path << ": parsed\n";
      } catch (const ParseError& e) {
        std::cout << path << ":" << e.what() << '\n';
        parsed = clean = false;
      }
    }
    if (parsed) {
      const std::string problem = static_problem(merged);
      if (problem.empty()) {
        std::cout << "theory: ok (" << merged.rules.size() << " rules)\n";
      } else {
        std::cout << "theory: " << problem << '\n';
        clean = false;
      }
    }
  }
  return clean ? kOk : kInvalid;
}

// ---- query -----------------------------------------------------------------

struct QueryArgs {
  std::vector<std::string> rules;
  std::vector<std::string> facts;
  std::string pattern;
  std::optional<std::string> now;
};

std::string format_match(const QueryMatch& m) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, term] : m.bindings) {
    if (!first) out += ", ";
    out += "?" + name + "=" + to_string(term);
    first = false;
  }
  out += "} " + to_string(m.literal);
  for (auto tag : m.tags) out += std::string(" ") + tag_name(tag);
  return out;
}

int cmd_query(const QueryArgs& args) {
  Literal pattern;
  try {
    pattern = parse_pattern(args.pattern);
  } catch (const ParseError& e) {
    std::cerr << "malformed pattern: " << e.what() << '\n';
    return kInvalid;
  }
  SourceProgram theory;
  std::vector<Literal> facts;
  EvalOptions options;
  try {
    for (const auto& path : args.rules) theory.append(parse_file(path));
    for (const auto& path : args.facts) {
      const SourceProgram f = parse_file(path);
      if (!f.rules.empty() || !f.superiorities.empty() || !f.conflicts.empty())
        throw InvalidInput(path + ": a fact file may contain facts only");
      facts.insert(facts.end(), f.facts.begin(), f.facts.end());
    }
    if (args.now) {
      const Term t = parse_pattern("n(v->" + *args.now + ")").args.at("v");
      if (!std::holds_alternative<Number>(t)) throw InvalidInput("--now must be a number");
      options.now = std::get<Number>(t);
    }
  } catch (const InvalidInput& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  } catch (const ParseError& e) {
    std::cerr << "--now: " << e.what() << '\n';
    return kInvalid;
  }
  std::optional<Engine> engine;
  try {
    engine.emplace(theory);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  }
  std::vector<std::string> lines;
  try {
    for (const auto& m : Engine::query(engine->run(facts, options), pattern)) lines.push_back(format_match(m));
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kRuntime;
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) std::cout << l << '\n';
  return kOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  SimConfig config;
  std::string out = "out";
  std::string theory;
  std::vector<std::string> policies;
  std::vector<double> densities, weights, social, thresholds;
  std::string filter, sigma_mode;
  double good_mean = 8.5, good_spread = 1.0, ordinary_mean = 5.5, ordinary_spread = 1.5;
  double bad_mean = 2.0, bad_spread = 1.5, consumer_mean = 8.5, consumer_spread = 1.0;
};

TimeFilter parse_filter(const std::string& text) {
  static const std::regex since(R"(since\((-?\d+)\))"), window(R"(window\((\d+)\))"),
      interval(R"(interval\((-?\d+),\s*(-?\d+)\))");
  std::smatch m;
  if (std::regex_match(text, m, since)) return TimeFilter::since(std::stoll(m[1]));
  if (std::regex_match(text, m, window)) return TimeFilter::window(std::stoll(m[1]));
  if (std::regex_match(text, m, interval)) return TimeFilter::interval(std::stoll(m[1]), std::stoll(m[2]));
  throw InvalidInput("filter must be since(N), window(N) or interval(A,B): " + text);
}

SigmaMode parse_sigma_mode(const std::string& text) {
  if (text == "pooled_normalized") return SigmaMode::pooled_normalized;
  if (text == "pooled_raw") return SigmaMode::pooled_raw;
  if (text == "per_coefficient") return SigmaMode::per_coefficient;
  throw InvalidInput("sigma_mode must be pooled_normalized, pooled_raw or per_coefficient");
}

template <std::size_t N>
void copy_into(std::array<double, N>& to, const std::vector<double>& from) {
  if (from.empty()) return;
  std::copy(from.begin(), from.end(), to.begin());
}

// Folds the parsed options into the simulation config.
SimConfig resolve(SimulateArgs args) {
  SimConfig& c = args.config;
  copy_into(c.densities, args.densities);
  copy_into(c.estimation.weights, args.weights);
  copy_into(c.estimation.social, args.social);
  copy_into(c.estimation.thresholds.coefficient, args.thresholds);
  c.profiles[0] = ProviderProfile::uniform(ProviderClass::good, args.good_mean, args.good_spread);
  c.profiles[1] = ProviderProfile::uniform(ProviderClass::ordinary, args.ordinary_mean, args.ordinary_spread);
  c.profiles[3] = ProviderProfile::uniform(ProviderClass::bad, args.bad_mean, args.bad_spread);
  c.consumer_profile = ProviderProfile::uniform(ProviderClass::good, args.consumer_mean, args.consumer_spread);
  if (!args.filter.empty()) c.estimation.filter = parse_filter(args.filter);
  if (!args.sigma_mode.empty()) c.estimation.sigma_mode = parse_sigma_mode(args.sigma_mode);
  try {
    if (!args.policies.empty()) {
      c.policies.clear();
      for (const auto& p : args.policies) c.policies.push_back(ConsumerPolicy::by_name(p));
    }
    if (!args.theory.empty()) {
      const Theory keep = Theory::by_name(args.theory);
      std::erase_if(c.policies, [&](const ConsumerPolicy& p) {
        return p.kind == PolicyKind::disarm && p.theory.name != keep.name;
      });
    }
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(e.what());
  }
  return c;
}

int cmd_simulate(const SimulateArgs& args) {
  SimConfig config;
  try {
    config = resolve(args);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kInvalid;
  }
  try {
    const SimResult result = run_simulation(config);
    fs::create_directories(args.out);
    result.write_csvs(args.out);
    result.write_summary(std::cout);
  } catch (const std::exception& e) {
    std::cerr << "simulation failed: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DISARM rule checking, querying and simulation"};
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Parse rule files and run the static checks");
  check_cmd->add_option("files", check.files, "Rule files, checked as one theory");
  check_cmd->add_option("--rules", check.files, "Rule files, checked as one theory");
  check_cmd->add_flag("--corpus", check.corpus, "Check every shipped corpus composition");

  QueryArgs query;
  std::string now;
  auto* query_cmd = app.add_subcommand("query", "Evaluate a theory and print the conclusions matching a pattern");
  query_cmd->add_option("--rules", query.rules, "Rule files")->required();
  query_cmd->add_option("--facts", query.facts, "Fact files");
  query_cmd->add_option("--pattern", query.pattern, "Literal pattern, e.g. WL(trustee->?x)")->required();
  auto* now_opt = query_cmd->add_option("--now", now, "Value of now()");

  SimulateArgs sim;
  std::string config_path;
  SimConfig& c = sim.config;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the provider-selection simulation and write CSVs");
  sim_cmd->add_option("--config", config_path, "Flat key = value file; flags override it")->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim.out, "Output directory")->capture_default_str();
  sim_cmd->add_option("--seed", c.seed)->capture_default_str();
  sim_cmd->add_option("--rounds", c.rounds)->capture_default_str();
  sim_cmd->add_option("--ttl", c.ttl)->capture_default_str();
  sim_cmd->add_option("--theory", sim.theory, "Keep only this DISARM theory")->check(CLI::IsMember({"t1", "t2", "t3"}));
  sim_cmd->add_option("--providers", c.providers)->capture_default_str();
  sim_cmd->add_option("--consumers_per_policy", c.consumers_per_policy)->capture_default_str();
  sim_cmd->add_option("--locate_per_round", c.locate_per_round)->capture_default_str();
  sim_cmd->add_option("--policies", sim.policies, "Comma list of t1,t2,t3,direct,none")
      ->delimiter(',')
      ->check(CLI::IsMember({"t1", "t2", "t3", "direct", "none"}));
  sim_cmd->add_option("--densities", sim.densities, "good,ordinary,intermittent,bad")->delimiter(',')->expected(4);
  sim_cmd->add_option("--good_mean", sim.good_mean);
  sim_cmd->add_option("--good_spread", sim.good_spread);
  sim_cmd->add_option("--ordinary_mean", sim.ordinary_mean);
  sim_cmd->add_option("--ordinary_spread", sim.ordinary_spread);
  sim_cmd->add_option("--bad_mean", sim.bad_mean);
  sim_cmd->add_option("--bad_spread", sim.bad_spread);
  sim_cmd->add_option("--consumer_mean", sim.consumer_mean);
  sim_cmd->add_option("--consumer_spread", sim.consumer_spread);
  sim_cmd->add_option("--weights", sim.weights, "Six coefficient weights")->delimiter(',')->expected(6);
  sim_cmd->add_option("--social", sim.social, "pr,wr,kr,sr weights")->delimiter(',')->expected(4);
  sim_cmd->add_option("--thresholds", sim.thresholds, "Six coefficient thresholds")->delimiter(',')->expected(6);
  sim_cmd->add_option("--confidence_threshold", c.estimation.thresholds.confidence);
  sim_cmd->add_option("--transaction_threshold", c.estimation.thresholds.transaction_value);
  sim_cmd->add_option("--filter", sim.filter, "since(N), window(N) or interval(A,B)");
  sim_cmd->add_option("--sigma_mode", sim.sigma_mode);
  sim_cmd->add_option("--confidence_min", c.rater.confidence_min);
  sim_cmd->add_option("--confidence_max", c.rater.confidence_max);
  sim_cmd->add_option("--transaction_min", c.rater.transaction_min);
  sim_cmd->add_option("--transaction_max", c.rater.transaction_max);

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) {
      // Keys are simulate option names; values already given as flags win.
      std::istringstream file("[simulate]\n" + read_file(config_path));
      app.parse_from_stream(file);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  } catch (const InvalidInput& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  }
  if (*now_opt) query.now = now;

  if (*check_cmd) return cmd_check(check);
  if (*query_cmd) return cmd_query(query);
  return cmd_simulate(sim);
}
