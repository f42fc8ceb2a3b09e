#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "randheap/layout.hpp"

namespace randheap::harness {

struct AllocCmd {
  std::uint64_t id = 0;
  std::uint64_t size = 0;
  std::optional<std::uint64_t> align;
  friend bool operator==(const AllocCmd&, const AllocCmd&) = default;
};

struct FreeCmd {
  std::uint64_t id = 0;
  friend bool operator==(const FreeCmd&, const FreeCmd&) = default;
};

struct CheckCmd {
  friend bool operator==(const CheckCmd&, const CheckCmd&) = default;
};

struct StatsCmd {
  friend bool operator==(const StatsCmd&, const StatsCmd&) = default;
};

using TraceCommand = std::variant<AllocCmd, FreeCmd, CheckCmd, StatsCmd>;

struct TraceLine {
  TraceCommand command;
  std::size_t line = 0;  // 1-based source line
  friend bool operator==(const TraceLine&, const TraceLine&) = default;
};

struct TraceProgram {
  std::vector<TraceLine> commands;
};

class TraceParseError : public std::runtime_error {
 public:
  enum class Kind { syntax, unknown_id, double_free, zero_size, bad_align, duplicate_id };

  TraceParseError(Kind kind, std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), kind(kind), line(line) {}

  Kind kind;
  std::size_t line;
};

namespace detail {

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

/// Parses the line-oriented trace language:
///
///   a <id> <size> [align=<align>]
///   f <id>
///   check
///   stats
///
/// '#' starts a comment; blank lines are ignored. The whole program is
/// validated (ids, sizes, alignments) before anything runs.
inline TraceProgram parse_trace(std::string_view text) {
  using Kind = TraceParseError::Kind;
  TraceProgram prog;
  std::set<std::uint64_t> live;
  std::set<std::uint64_t> ever;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;

    auto id_of = [&](std::string_view s) {
      auto v = detail::parse_u64(s);
      if (!v || *v == 0) throw TraceParseError(Kind::syntax, line_no, "id must be a positive integer");
      return *v;
    };

    if (tok[0] == "a") {
      if (tok.size() != 3 && tok.size() != 4) throw TraceParseError(Kind::syntax, line_no, "expected: a <id> <size> [align=<n>]");
      AllocCmd cmd;
      cmd.id = id_of(tok[1]);
      auto size = detail::parse_u64(tok[2]);
      if (!size) throw TraceParseError(Kind::syntax, line_no, "size must be an integer");
      if (*size == 0) throw TraceParseError(Kind::zero_size, line_no, "zero-size allocation");
      cmd.size = *size;
      if (tok.size() == 4) {
        constexpr std::string_view kAlign = "align=";
        if (tok[3].substr(0, kAlign.size()) != kAlign) throw TraceParseError(Kind::syntax, line_no, "expected align=<n>");
        auto align = detail::parse_u64(tok[3].substr(kAlign.size()));
        if (!align) throw TraceParseError(Kind::syntax, line_no, "alignment must be an integer");
        if (!is_power_of_two(*align)) throw TraceParseError(Kind::bad_align, line_no, "alignment is not a power of two");
        cmd.align = *align;
      }
      if (!live.insert(cmd.id).second)
        throw TraceParseError(Kind::duplicate_id, line_no, "id " + std::to_string(cmd.id) + " is already live");
      ever.insert(cmd.id);
      prog.commands.push_back({cmd, line_no});
    } else if (tok[0] == "f") {
      if (tok.size() != 2) throw TraceParseError(Kind::syntax, line_no, "expected: f <id>");
      const std::uint64_t id = id_of(tok[1]);
      if (live.erase(id) == 0) {
        if (ever.count(id) != 0) throw TraceParseError(Kind::double_free, line_no, "double free of id " + std::to_string(id));
        throw TraceParseError(Kind::unknown_id, line_no, "unknown id " + std::to_string(id));
      }
      prog.commands.push_back({FreeCmd{id}, line_no});
    } else if (tok[0] == "check" && tok.size() == 1) {
      prog.commands.push_back({CheckCmd{}, line_no});
    } else if (tok[0] == "stats" && tok.size() == 1) {
      prog.commands.push_back({StatsCmd{}, line_no});
    } else {
      throw TraceParseError(Kind::syntax, line_no, "unknown command '" + std::string(tok[0]) + "'");
    }
  }
  return prog;
}

/// Inverse of parse_trace, one command per line.
inline std::string format_trace(const TraceProgram& prog) {
  std::ostringstream out;
  for (const auto& tl : prog.commands) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AllocCmd>) {
            out << "a " << c.id << ' ' << c.size;
            if (c.align) out << " align=" << *c.align;
          } else if constexpr (std::is_same_v<T, FreeCmd>) {
            out << "f " << c.id;
          } else if constexpr (std::is_same_v<T, CheckCmd>) {
            out << "check";
          } else {
            out << "stats";
          }
        },
        tl.command);
    out << '\n';
  }
  return out.str();
}

}  // namespace randheap::harness
