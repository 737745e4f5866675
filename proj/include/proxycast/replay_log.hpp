#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxycast/core.hpp"
#include "proxycast/environment.hpp"

namespace proxycast {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// External event log. Format (ASCII, LF line endings, base-10 integers):
//
//   #spaces N |Z| |Y| D_z D
//   round,instance,proxy,outcome
//   ...
//
// Indices are 0-based, rounds 1-based and strictly increasing. An empty
// body (header only) is a valid empty stream.
struct ReplayLog {
  ProblemSpaces spaces;
  std::vector<RoundEvent> events;

  EventStream to_stream() const {
    EventStream s;
    s.events = events;
    s.true_proxies.reserve(events.size());
    for (const auto& e : events) s.true_proxies.push_back(e.proxy);
    return s;
  }
};

namespace detail {

inline std::int64_t parse_int_field(const std::string& text, const std::string& source,
                                    std::size_t line_no) {
  std::size_t pos = 0;
  std::int64_t value = 0;
  try {
    value = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) {
    std::ostringstream msg;
    msg << source << ":" << line_no << ": expected integer, got '" << text << "'";
    throw ParseError(msg.str());
  }
  return value;
}

}  // namespace detail

inline ReplayLog parse_replay_log(std::istream& in, const std::string& source_name) {
  ReplayLog log;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(source_name + ": empty file, missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::istringstream hs(line);
    std::string tag;
    hs >> tag;
    if (tag != "#spaces")
      throw ParseError(source_name + ":1: header must start with '#spaces'");
    ProblemSpaces s;
    if (!(hs >> s.n_instances >> s.n_proxies >> s.n_outcomes >> s.proxy_delay >> s.outcome_delay))
      throw ParseError(source_name + ":1: header needs 5 integers: N |Z| |Y| D_z D");
    std::string extra;
    if (hs >> extra) throw ParseError(source_name + ":1: trailing content in header");
    try {
      s.validate();
    } catch (const std::exception& e) {
      throw ParseError(source_name + ":1: " + e.what());
    }
    log.spaces = s;
  }

  std::int64_t prev_round = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                     : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 4) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": expected 4 fields 'round,instance,proxy,outcome', got "
          << fields.size();
      throw ParseError(msg.str());
    }
    RoundEvent e;
    e.round = detail::parse_int_field(fields[0], source_name, line_no);
    e.instance = static_cast<int>(detail::parse_int_field(fields[1], source_name, line_no));
    e.proxy = static_cast<int>(detail::parse_int_field(fields[2], source_name, line_no));
    e.outcome = static_cast<int>(detail::parse_int_field(fields[3], source_name, line_no));
    try {
      validate_event(e, log.spaces);
    } catch (const std::exception& ex) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": " << ex.what();
      throw ParseError(msg.str());
    }
    if (e.round <= prev_round) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": rounds must be strictly increasing ("
          << e.round << " after " << prev_round << ")";
      throw ParseError(msg.str());
    }
    prev_round = e.round;
    log.events.push_back(e);
  }
  return log;
}

inline ReplayLog load_replay_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  return parse_replay_log(in, path);
}

inline void write_replay_log(std::ostream& out, const ProblemSpaces& spaces,
                             const EventStream& stream) {
  out << "#spaces " << spaces.n_instances << " " << spaces.n_proxies << " "
      << spaces.n_outcomes << " " << spaces.proxy_delay << " " << spaces.outcome_delay
      << "\n";
  for (const auto& e : stream.events)
    out << e.round << "," << e.instance << "," << e.proxy << "," << e.outcome << "\n";
}

}  // namespace proxycast
