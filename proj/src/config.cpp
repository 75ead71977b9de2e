#include "blowup_lab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "blowup_lab/errors.hpp"

namespace blowup_lab {

SolverParams SolverConfig::params() const {
  SolverParams p;
  p.cfl_safety = cfl_safety;
  p.reaction_safety = reaction_safety;
  p.u_stop = u_stop;
  p.max_steps = max_steps;
  p.series_resolution = series_resolution;
  return p;
}

bool OutputConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, "line " + std::to_string(line) + ": " + msg);
}

// Cuts a trailing comment that is not inside double quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (!quoted && (line[i] == '#' || line[i] == ';')) return line.substr(0, i);
  }
  return line;
}

struct Entry {
  std::string value;
  int line = 0;
};

bool is_quoted(const std::string& v) { return v.size() >= 2 && v.front() == '"' && v.back() == '"'; }

double to_real(const Entry& e, const std::string& key) {
  if (is_quoted(e.value)) fail(e.line, "key '" + key + "' expects a number, got a string");
  const char* begin = e.value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (e.value.empty() || end != begin + e.value.size() || !std::isfinite(v))
    fail(e.line, "key '" + key + "' expects a number, got '" + e.value + "'");
  return v;
}

long long to_integer(const Entry& e, const std::string& key) {
  const double v = to_real(e, key);
  if (v != std::floor(v) || std::abs(v) > 9e15)
    fail(e.line, "key '" + key + "' expects an integer, got '" + e.value + "'");
  return static_cast<long long>(v);
}

int to_int(const Entry& e, const std::string& key) {
  const long long v = to_integer(e, key);
  if (v < -2147483647LL || v > 2147483647LL) fail(e.line, "key '" + key + "' is out of range");
  return static_cast<int>(v);
}

std::string to_word(const Entry& e, const std::string& key) {
  std::string v = e.value;
  if (is_quoted(v)) v = v.substr(1, v.size() - 2);
  if (v.empty()) fail(e.line, "key '" + key + "' expects a non-empty string");
  return v;
}

std::vector<std::string> split_list(const Entry& e) {
  std::string v = e.value;
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') fail(e.line, "unterminated list");
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> items;
  if (trim(v).empty()) return items;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

std::vector<double> to_real_list(const Entry& e, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(e)) out.push_back(to_real({item, e.line}, key));
  return out;
}

std::vector<int> to_int_list(const Entry& e, const std::string& key) {
  std::vector<int> out;
  for (const auto& item : split_list(e)) out.push_back(to_int({item, e.line}, key));
  return out;
}

std::vector<std::string> to_word_list(const Entry& e, const std::string& key) {
  std::vector<std::string> out;
  for (const auto& item : split_list(e)) out.push_back(to_word({item, e.line}, key));
  return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = [] {
    std::map<std::string, std::set<std::string>> k;
    k["problem"] = {"N", "p", "domain_kind", "extent", "M", "potential_floor"};
    for (const char* fn : {"V", "phi"})
      for (const char* f : {"kind", "value", "base", "amp", "center", "width", "extent", "nodes", "values"})
        k["problem"].insert(std::string(fn) + "." + f);
    k["solver"] = {"m", "cfl_safety", "reaction_safety", "u_stop", "max_steps", "series_resolution"};
    k["sweep"] = {"Ms", "workers", "theorem2_tolerance"};
    k["selfsim"] = {"y_max", "m_y", "k_list", "frame_count", "s_start", "s_end", "cutoff_R"};
    k["output"] = {"dir", "formats"};
    return k;
  }();
  return keys;
}

using Section = std::map<std::string, Entry>;

FunctionSpec read_function(const Section& sec, const std::string& prefix, FunctionKind default_kind,
                           double domain_extent, int section_line) {
  auto find = [&](const std::string& f) -> const Entry* {
    auto it = sec.find(prefix + "." + f);
    return it == sec.end() ? nullptr : &it->second;
  };
  FunctionSpec fn;
  fn.kind = default_kind;
  fn.extent = domain_extent;
  int line = section_line;
  if (const Entry* e = find("kind")) {
    line = e->line;
    try {
      fn.kind = function_kind_from_string(to_word(*e, prefix + ".kind"));
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::ConfigError) throw;
      fail(e->line, "unknown function kind '" + e->value + "' for " + prefix);
    }
  }
  if (const Entry* e = find("value")) fn.value = to_real(*e, prefix + ".value");
  if (const Entry* e = find("base")) fn.base = to_real(*e, prefix + ".base");
  if (const Entry* e = find("amp")) fn.amp = to_real(*e, prefix + ".amp");
  if (const Entry* e = find("center")) fn.center = to_real(*e, prefix + ".center");
  if (const Entry* e = find("width")) fn.width = to_real(*e, prefix + ".width");
  if (const Entry* e = find("extent")) fn.extent = to_real(*e, prefix + ".extent");
  if (const Entry* e = find("nodes")) fn.nodes = to_real_list(*e, prefix + ".nodes");
  if (const Entry* e = find("values")) fn.values = to_real_list(*e, prefix + ".values");

  try {
    if (fn.kind == FunctionKind::GaussianBump) FunctionSpec::gaussian_bump(fn.base, fn.amp, fn.center, fn.width);
    if (fn.kind == FunctionKind::Table) FunctionSpec::table(fn.nodes, fn.values);
    if (fn.kind == FunctionKind::CosineCap && !(fn.extent > 0.0))
      throw Error(ErrorKind::InvalidArgument, "cosine_cap extent must be positive");
  } catch (const Error& err) {
    fail(line, prefix + ": " + err.what());
  }
  return fn;
}

}  // namespace

Config parse_config(const std::string& text) {
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_lines;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header '" + line + "'");
      current = trim(line.substr(1, line.size() - 2));
      if (!known_keys().count(current)) fail(line_no, "unknown section [" + current + "]");
      if (section_lines.count(current)) fail(line_no, "duplicate section [" + current + "]");
      section_lines[current] = line_no;
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value', got '" + line + "'");
    if (current.empty()) fail(line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().at(current).count(key)) fail(line_no, "unknown key '" + key + "' in [" + current + "]");
    auto& sec = sections[current];
    if (sec.count(key))
      fail(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(sec[key].line) + ")");
    if (value.empty()) fail(line_no, "key '" + key + "' has no value");
    sec[key] = {value, line_no};
  }

  if (!sections.count("problem")) fail(line_no, "missing [problem] section");
  Config c;
  const Section& pr = sections["problem"];
  const int pline = section_lines["problem"];
  for (const char* req : {"N", "p", "domain_kind", "extent"})
    if (!pr.count(req)) fail(pline, std::string("[problem] is missing required key '") + req + "'");

  c.problem.N = to_int(pr.at("N"), "N");
  c.problem.p = to_real(pr.at("p"), "p");
  const std::string dk = to_word(pr.at("domain_kind"), "domain_kind");
  if (dk == "interval")
    c.problem.domain = DomainKind::Interval;
  else if (dk == "ball")
    c.problem.domain = DomainKind::Ball;
  else
    fail(pr.at("domain_kind").line, "domain_kind must be 'interval' or 'ball', got '" + dk + "'");
  c.problem.extent = to_real(pr.at("extent"), "extent");
  if (!(c.problem.extent > 0.0)) fail(pr.at("extent").line, "extent must be positive");
  if (pr.count("M")) c.M = to_real(pr.at("M"), "M");
  if (pr.count("potential_floor")) c.problem.potential_floor = to_real(pr.at("potential_floor"), "potential_floor");
  c.problem.potential = read_function(pr, "V", FunctionKind::Constant, c.problem.extent, pline);
  c.problem.profile = read_function(pr, "phi", FunctionKind::CosineCap, c.problem.extent, pline);

  if (sections.count("solver")) {
    const Section& s = sections["solver"];
    if (s.count("m")) c.solver.m = to_int(s.at("m"), "m");
    if (s.count("cfl_safety")) c.solver.cfl_safety = to_real(s.at("cfl_safety"), "cfl_safety");
    if (s.count("reaction_safety")) c.solver.reaction_safety = to_real(s.at("reaction_safety"), "reaction_safety");
    if (s.count("u_stop")) c.solver.u_stop = to_real(s.at("u_stop"), "u_stop");
    if (s.count("max_steps")) c.solver.max_steps = to_integer(s.at("max_steps"), "max_steps");
    if (s.count("series_resolution"))
      c.solver.series_resolution = to_real(s.at("series_resolution"), "series_resolution");
    try {
      c.solver.params().validate();
    } catch (const Error& err) {
      fail(section_lines["solver"], err.what());
    }
  }
  if (sections.count("sweep")) {
    const Section& s = sections["sweep"];
    if (s.count("Ms")) c.sweep.Ms = to_real_list(s.at("Ms"), "Ms");
    if (s.count("workers")) c.sweep.workers = to_int(s.at("workers"), "workers");
    if (s.count("theorem2_tolerance"))
      c.sweep.theorem2_tolerance = to_real(s.at("theorem2_tolerance"), "theorem2_tolerance");
    if (s.count("workers") && c.sweep.workers < 1) fail(s.at("workers").line, "workers must be >= 1");
  }
  if (sections.count("selfsim")) {
    const Section& s = sections["selfsim"];
    if (s.count("y_max")) c.selfsim.y_max = to_real(s.at("y_max"), "y_max");
    if (s.count("m_y")) c.selfsim.m_y = to_int(s.at("m_y"), "m_y");
    if (s.count("k_list")) c.selfsim.k_list = to_int_list(s.at("k_list"), "k_list");
    if (s.count("frame_count")) c.selfsim.frame_count = to_int(s.at("frame_count"), "frame_count");
    if (s.count("s_start")) c.selfsim.s_start = to_real(s.at("s_start"), "s_start");
    if (s.count("s_end")) c.selfsim.s_end = to_real(s.at("s_end"), "s_end");
    if (c.selfsim.s_start.has_value() != c.selfsim.s_end.has_value())
      fail(section_lines["selfsim"], "s_start and s_end must be given together");
    if (s.count("cutoff_R")) c.selfsim.cutoff_R = to_real_list(s.at("cutoff_R"), "cutoff_R");
    for (int k : c.selfsim.k_list)
      if (k < 0 || k > 3) fail(s.at("k_list").line, "k_list entries must lie in 0..3");
    if (c.selfsim.frame_count < 3) fail(section_lines["selfsim"], "frame_count must be >= 3");
  }
  if (sections.count("output")) {
    const Section& s = sections["output"];
    if (s.count("dir")) c.output.dir = to_word(s.at("dir"), "dir");
    if (s.count("formats")) {
      c.output.formats = to_word_list(s.at("formats"), "formats");
      for (const auto& f : c.output.formats)
        if (f != "csv" && f != "json") fail(s.at("formats").line, "unknown output format '" + f + "'");
    }
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, std::string>)
      out += v[i];
    else if constexpr (std::is_integral_v<T>)
      out += std::to_string(v[i]);
    else
      out += num(v[i]);
  }
  return "[" + out + "]";
}

void write_function(std::ostream& out, const std::string& prefix, const FunctionSpec& fn, double domain_extent) {
  const FunctionSpec d;
  out << prefix << ".kind = " << to_string(fn.kind) << "\n";
  if (fn.value != d.value) out << prefix << ".value = " << num(fn.value) << "\n";
  if (fn.base != d.base) out << prefix << ".base = " << num(fn.base) << "\n";
  if (fn.amp != d.amp) out << prefix << ".amp = " << num(fn.amp) << "\n";
  if (fn.center != d.center) out << prefix << ".center = " << num(fn.center) << "\n";
  if (fn.width != d.width) out << prefix << ".width = " << num(fn.width) << "\n";
  if (fn.extent != domain_extent) out << prefix << ".extent = " << num(fn.extent) << "\n";
  if (!fn.nodes.empty()) out << prefix << ".nodes = " << list(fn.nodes) << "\n";
  if (!fn.values.empty()) out << prefix << ".values = " << list(fn.values) << "\n";
}

}  // namespace

std::string serialize_config(const Config& c) {
  std::ostringstream out;
  const auto& p = c.problem;
  out << "[problem]\n";
  out << "N = " << p.N << "\n";
  out << "p = " << num(p.p) << "\n";
  out << "domain_kind = " << (p.domain == DomainKind::Interval ? "interval" : "ball") << "\n";
  out << "extent = " << num(p.extent) << "\n";
  out << "M = " << num(c.M) << "\n";
  out << "potential_floor = " << num(p.potential_floor) << "\n";
  write_function(out, "V", p.potential, p.extent);
  write_function(out, "phi", p.profile, p.extent);

  out << "\n[solver]\n";
  out << "m = " << c.solver.m << "\n";
  out << "cfl_safety = " << num(c.solver.cfl_safety) << "\n";
  out << "reaction_safety = " << num(c.solver.reaction_safety) << "\n";
  out << "u_stop = " << num(c.solver.u_stop) << "\n";
  out << "max_steps = " << c.solver.max_steps << "\n";
  out << "series_resolution = " << num(c.solver.series_resolution) << "\n";

  out << "\n[sweep]\n";
  out << "Ms = " << list(c.sweep.Ms) << "\n";
  out << "workers = " << c.sweep.workers << "\n";
  out << "theorem2_tolerance = " << num(c.sweep.theorem2_tolerance) << "\n";

  out << "\n[selfsim]\n";
  out << "y_max = " << num(c.selfsim.y_max) << "\n";
  out << "m_y = " << c.selfsim.m_y << "\n";
  out << "k_list = " << list(c.selfsim.k_list) << "\n";
  out << "frame_count = " << c.selfsim.frame_count << "\n";
  if (c.selfsim.s_start) out << "s_start = " << num(*c.selfsim.s_start) << "\n";
  if (c.selfsim.s_end) out << "s_end = " << num(*c.selfsim.s_end) << "\n";
  out << "cutoff_R = " << list(c.selfsim.cutoff_R) << "\n";

  out << "\n[output]\n";
  out << "dir = \"" << c.output.dir << "\"\n";
  out << "formats = " << list(c.output.formats) << "\n";
  return out.str();
}

}  // namespace blowup_lab
