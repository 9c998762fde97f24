#pragma once

// Access to the shipped rule files (rules/*.dpl), embedded at build time.

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "disarm/corpus_data.hpp"
#include "disarm/dposl.hpp"
#include "disarm/errors.hpp"

namespace disarm::corpus {

inline std::vector<std::string> file_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : corpus_data::files) out.emplace_back(name);
  return out;
}

inline std::string_view text(std::string_view name) {
  for (const auto& [n, t] : corpus_data::files)
    if (n == name) return t;
  throw Error("no corpus file named " + std::string(name));
}

/// Parses and merges the named files in order, then checks cross-file references.
inline SourceProgram load(std::initializer_list<std::string_view> names) {
  SourceProgram out;
  for (auto name : names) {
    try {
      out.append(parse_program(text(name), ParseOptions{false}));
    } catch (const ParseError& e) {
      throw Error(std::string(name) + ":" + e.what());
    }
  }
  validate_program(out);
  return out;
}

inline SourceProgram load(const std::vector<std::string>& names) {
  SourceProgram out;
  for (const auto& name : names) out.append(parse_program(text(name), ParseOptions{false}));
  validate_program(out);
  return out;
}

/// A set of corpus files that is evaluated as one theory.
struct Composition {
  std::string name;
  std::vector<std::string> files;
};

/// Every theory the library evaluates. The corpus as a whole is not one
/// theory: received ratings (r24) depend on BL through negation while BL
/// depends on ratings through behavior and lists.
inline std::vector<Composition> compositions() {
  const std::vector<std::string> estimation = {"eligibility.dpl", "count_since.dpl", "categorize.dpl",
                                               "participate.dpl"};
  auto with = [](std::vector<std::string> files, std::initializer_list<std::string> extra) {
    files.insert(files.end(), extra.begin(), extra.end());
    return files;
  };
  return {
      {"behavior", {"behavior.dpl"}},
      {"strategy", {"strategy_r8.dpl", "strategy_r9.dpl", "strategy_r10.dpl", "strategy_r11.dpl"}},
      {"lists", {"lists.dpl"}},
      {"exchange", {"exchange.dpl"}},
      {"estimation-t1", estimation},
      {"estimation-t2", with(estimation, {"theory2.dpl"})},
      {"estimation-t3", with(estimation, {"theory3.dpl"})},
      {"estimation-interval", {"eligibility.dpl", "count_interval.dpl", "categorize.dpl", "participate.dpl"}},
      {"estimation-window", {"eligibility.dpl", "count_window.dpl", "categorize.dpl", "participate.dpl"}},
      {"estimation-strict-conflicts",
       with(estimation, {"eligibility_strict_conflict.dpl", "participate_strict_conflict.dpl", "theory3.dpl"})},
  };
}

}  // namespace disarm::corpus
