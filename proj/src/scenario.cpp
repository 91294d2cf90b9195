#include "dws/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "dws/exchange.hpp"

namespace dws {

namespace fs = std::filesystem;

ConfigError::ConfigError(const std::string& source, int line, const std::string& msg)
    : ValidationError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg), line(line) {}

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::oscillation: return "oscillation";
    case Experiment::levels: return "levels";
    case Experiment::basis: return "basis";
  }
  return "?";
}

const RampSchedule& Scenario::ramp(const std::string& name) const {
  for (const auto& [n, r] : ramps)
    if (n == name) return r;
  throw ValidationError("unknown ramp '" + name + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Entry {
  std::string key, value;
  int line = 0;
  bool used = false;
};

struct Section {
  std::string kind, arg;
  int line = 0;
  std::vector<Entry> entries;
};

class Reader {
 public:
  Reader(Section& s, const std::string& src) : s_(s), src_(src) {}

  [[noreturn]] void fail(int line, const std::string& msg) const { throw ConfigError(src_, line, msg); }

  Entry* find(const std::string& key) {
    Entry* hit = nullptr;
    for (Entry& e : s_.entries)
      if (e.key == key) {
        if (hit) fail(e.line, "duplicate key '" + key + "'");
        hit = &e;
      }
    if (hit) hit->used = true;
    return hit;
  }
  bool has(const std::string& key) {
    for (const Entry& e : s_.entries)
      if (e.key == key) return true;
    return false;
  }
  std::vector<Entry*> all(const std::string& key) {
    std::vector<Entry*> out;
    for (Entry& e : s_.entries)
      if (e.key == key) {
        e.used = true;
        out.push_back(&e);
      }
    return out;
  }

  double number(const Entry& e, const std::string& text) const {
    double v = 0.0;
    const char* b = text.data();
    const char* end = b + text.size();
    if (!text.empty() && *b == '+') ++b;
    const auto r = std::from_chars(b, end, v);
    if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v))
      fail(e.line, "'" + e.key + "': expected a number, got '" + text + "'");
    return v;
  }
  double number(const std::string& key, double def) {
    const Entry* e = find(key);
    return e ? number(*e, e->value) : def;
  }
  std::optional<double> maybe_number(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    return number(*e, e->value);
  }
  int integer(const std::string& key, int def) {
    const Entry* e = find(key);
    if (!e) return def;
    const double v = number(*e, e->value);
    if (v != std::floor(v) || std::abs(v) > 2e9) fail(e->line, "'" + key + "': expected an integer");
    return static_cast<int>(v);
  }
  bool boolean(const std::string& key, bool def) {
    const Entry* e = find(key);
    if (!e) return def;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    fail(e->line, "'" + key + "': expected true or false");
  }
  std::string text(const std::string& key, const std::string& def) {
    const Entry* e = find(key);
    return e ? e->value : def;
  }
  template <class T>
  T choice(const std::string& key, T def, const std::vector<std::pair<std::string, T>>& options) {
    const Entry* e = find(key);
    if (!e) return def;
    for (const auto& [name, v] : options)
      if (e->value == name) return v;
    std::string names;
    for (const auto& o : options) names += (names.empty() ? "" : ", ") + o.first;
    fail(e->line, "'" + key + "': expected one of " + names);
  }
  // Numbers with optional pi: 1.5, pi, -pi/2, 3*pi/4.
  double angle(const Entry& e) const {
    std::string v = e.value;
    const auto p = v.find("pi");
    if (p == std::string::npos) return number(e, v);
    std::string pre = v.substr(0, p), post = v.substr(p + 2);
    double scale = 1.0;
    if (pre == "-") {
      scale = -1.0;
    } else if (!pre.empty()) {
      if (pre.back() != '*') fail(e.line, "'" + e.key + "': cannot read '" + v + "'");
      scale = number(e, pre.substr(0, pre.size() - 1));
    }
    double div = 1.0;
    if (!post.empty()) {
      if (post.front() != '/') fail(e.line, "'" + e.key + "': cannot read '" + v + "'");
      div = number(e, post.substr(1));
      if (div == 0.0) fail(e.line, "'" + e.key + "': division by zero");
    }
    return scale * std::numbers::pi / div;
  }
  // Comma or space separated values; a:b:c expands to a, a+c, ... <= b.
  std::vector<double> list(const Entry& e) const {
    std::vector<double> out;
    for (const std::string& tok : split_tokens(e.value)) {
      const auto c1 = tok.find(':');
      if (c1 == std::string::npos) {
        out.push_back(number(e, tok));
        continue;
      }
      const auto c2 = tok.find(':', c1 + 1);
      if (c2 == std::string::npos) fail(e.line, "'" + e.key + "': range needs start:stop:step");
      const double a = number(e, tok.substr(0, c1)), b = number(e, tok.substr(c1 + 1, c2 - c1 - 1));
      const double st = number(e, tok.substr(c2 + 1));
      if (!(st > 0) || b < a) fail(e.line, "'" + e.key + "': range needs stop >= start and step > 0");
      const long count = static_cast<long>(std::floor((b - a) / st + 1e-9)) + 1;
      if (count > 1000000) fail(e.line, "'" + e.key + "': range too long");
      for (long k = 0; k < count; ++k) out.push_back(a + double(k) * st);
    }
    if (out.empty()) fail(e.line, "'" + e.key + "': empty list");
    return out;
  }

  void finish() const {
    for (const Entry& e : s_.entries)
      if (!e.used) fail(e.line, "unknown key '" + e.key + "' in [" + s_.kind + "]");
  }
  int line() const { return s_.line; }

 private:
  Section& s_;
  const std::string& src_;
};

std::vector<Section> read_sections(std::istream& is, const std::string& src) {
  std::vector<Section> out;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string s = trim(std::string_view(raw).substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(src, line, "unterminated section header");
      const std::string inner = trim(std::string_view(s).substr(1, s.size() - 2));
      const auto sp = inner.find_first_of(" \t");
      Section sec;
      sec.kind = inner.substr(0, sp);
      sec.arg = sp == std::string::npos ? std::string() : trim(std::string_view(inner).substr(sp));
      sec.line = line;
      if (sec.kind.empty()) throw ConfigError(src, line, "empty section header");
      out.push_back(std::move(sec));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(src, line, "expected 'key = value'");
    if (out.empty()) throw ConfigError(src, line, "key outside of any section");
    Entry e{trim(std::string_view(s).substr(0, eq)), trim(std::string_view(s).substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError(src, line, "missing key");
    if (e.value.empty()) throw ConfigError(src, line, "missing value for '" + e.key + "'");
    out.back().entries.push_back(std::move(e));
  }
  return out;
}

std::optional<Spin> read_spin(Reader& r, const std::string& key) {
  Entry* e = r.find(key);
  if (!e) r.fail(r.line(), "prepare: missing '" + key + "' (0, 1 or none)");
  if (e->value == "0") return Spin::zero;
  if (e->value == "1") return Spin::one;
  if (e->value == "none") return std::nullopt;
  r.fail(e->line, "'" + key + "': expected 0, 1 or none");
}

const std::vector<std::pair<std::string, PulseTarget>> kTargets{
    {"L", PulseTarget::L}, {"R", PulseTarget::R}, {"both", PulseTarget::both}, {"e", PulseTarget::e}, {"g", PulseTarget::g}};

Step read_step(Reader& r, const std::string& type, const Scenario& sc) {
  if (type == "prepare") {
    PrepareStep p;
    p.q_L = read_spin(r, "q_L");
    p.p_R = read_spin(r, "p_R");
    return p;
  }
  if (type == "ramp") {
    Entry* e = r.find("ramp");
    if (!e) r.fail(r.line(), "ramp step: missing 'ramp'");
    for (const auto& [name, ramp] : sc.ramps)
      if (name == e->value) return RampStep{name, ramp};
    r.fail(e->line, "ramp step: unknown ramp '" + e->value + "' (declare [ramp NAME] first)");
  }
  if (type == "hold") {
    HoldStep h;
    h.sweep = r.boolean("sweep", false);
    const auto t = r.maybe_number("t_us");
    if (h.sweep == t.has_value()) r.fail(r.line(), "hold step: give either t_us or sweep = true");
    if (t) {
      if (*t < 0) r.fail(r.line(), "hold step: t_us must be >= 0");
      h.t = *t * 1e-6;
    }
    return h;
  }
  if (type == "pulse") {
    RfPulse p;
    p.target = r.choice("target", PulseTarget::both, kTargets);
    p.rabi_hz = r.number("rabi_hz", 4e3);
    const Entry* area = r.find("area");
    const auto dur = r.maybe_number("duration_us");
    if ((area != nullptr) == dur.has_value()) r.fail(r.line(), "pulse step: give either area or duration_us");
    if (area) {
      const double a = r.angle(*area);
      if (!(p.rabi_hz > 0) || a < 0) r.fail(area->line, "pulse step: area needs rabi_hz > 0 and area >= 0");
      p.duration = a / (2.0 * std::numbers::pi * p.rabi_hz);
    } else {
      p.duration = *dur * 1e-6;
    }
    if (const Entry* ph = r.find("phase")) p.phase = r.angle(*ph);
    const auto det = r.maybe_number("detuning_hz");
    p.detuning_hz = det.value_or(0.0);
    p.resonant = r.boolean("resonant", !det.has_value());
    try {
      p.validate();
    } catch (const DomainError& e) {
      r.fail(r.line(), e.what());
    }
    return PulseStep{p};
  }
  if (type == "measure") return MeasureStep{};
  r.fail(r.line(), "unknown step type '" + type + "' (prepare, ramp, hold, pulse, measure)");
}

RampSchedule read_ramp(Reader& r) {
  const Interpolation interp = r.choice<Interpolation>(
      "interp", Interpolation::smoothstep, {{"smoothstep", Interpolation::smoothstep}, {"linear", Interpolation::linear}});
  const double fy = r.number("f_y_hz", LatticeParams{}.f_y), fz = r.number("f_z_hz", LatticeParams{}.f_z);
  std::vector<RampKnot> knots;
  for (Entry* e : r.all("knot")) {
    std::map<std::string, Entry> fields;
    for (const std::string& tok : split_tokens(e->value)) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0) r.fail(e->line, "knot: expected name=value fields, got '" + tok + "'");
      const std::string name = tok.substr(0, eq);
      if (fields.count(name)) r.fail(e->line, "knot: duplicate field '" + name + "'");
      fields.emplace(name, Entry{name, tok.substr(eq + 1), e->line});
    }
    auto take = [&](const std::string& name, std::optional<double> def, bool angle) {
      const auto it = fields.find(name);
      if (it == fields.end()) {
        if (!def) r.fail(e->line, "knot: missing field '" + name + "'");
        return *def;
      }
      const double v = angle ? r.angle(it->second) : r.number(it->second, it->second.value);
      fields.erase(it);
      return v;
    };
    RampKnot k;
    k.t = take("t_us", std::nullopt, false) * 1e-6;
    k.params.v_long = take("v_long_ER", std::nullopt, false);
    k.params.v_short = take("v_short_ER", std::nullopt, false);
    k.params.theta = take("theta_rad", std::nullopt, true);
    k.params.dtheta_spin = take("dtheta_spin_rad", 0.0, true);
    k.params.f_y = take("f_y_hz", fy, false);
    k.params.f_z = take("f_z_hz", fz, false);
    if (!fields.empty()) r.fail(e->line, "knot: unknown field '" + fields.begin()->first + "'");
    if (!knots.empty() && !(k.t > knots.back().t))
      r.fail(e->line, "knot times must be strictly increasing (overlaps the previous knot)");
    try {
      k.params.validate();
    } catch (const std::invalid_argument& ex) {
      r.fail(e->line, std::string("knot: ") + ex.what());
    }
    knots.push_back(k);
  }
  if (knots.empty()) r.fail(r.line(), "ramp needs at least one knot");
  return RampSchedule(std::move(knots), interp);
}

void fmt(std::ostream& os, const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  os << buf;
}

}  // namespace

Scenario parse_scenario(std::istream& is, const std::string& src) {
  std::vector<Section> sections = read_sections(is, src);
  Scenario sc;
  sc.source = src;
  std::set<std::string> singletons;
  std::vector<int> step_lines;
  bool have_sweep = false, have_levels = false;
  std::optional<int> levels_line;

  // Ramps first so steps may refer to ramps declared further down.
  for (Section& sec : sections) {
    if (sec.kind != "ramp") continue;
    Reader r(sec, src);
    if (sec.arg.empty()) r.fail(sec.line, "[ramp] needs a name: [ramp NAME]");
    for (const auto& [name, _] : sc.ramps)
      if (name == sec.arg) r.fail(sec.line, "duplicate ramp '" + sec.arg + "'");
    sc.ramps.emplace_back(sec.arg, read_ramp(r));
    r.finish();
  }

  for (Section& sec : sections) {
    Reader r(sec, src);
    const std::string& k = sec.kind;
    if (k == "ramp") continue;
    if (k != "step") {
      if (!sec.arg.empty()) r.fail(sec.line, "[" + k + "] takes no argument");
      if (!singletons.insert(k).second) r.fail(sec.line, "duplicate section [" + k + "]");
    }
    if (k == "scenario") {
      sc.experiment = r.choice<Experiment>("experiment", Experiment::oscillation,
                                           {{"oscillation", Experiment::oscillation},
                                            {"levels", Experiment::levels},
                                            {"basis", Experiment::basis}});
      sc.engine = r.choice<Engine>("engine", Engine::mode, {{"mode", Engine::mode}, {"grid", Engine::grid}});
      const double seed = r.number("seed", 1.0);
      if (seed < 0 || seed != std::floor(seed) || seed > 9.007e15) r.fail(sec.line, "seed must be a non-negative integer");
      sc.seed = static_cast<std::uint64_t>(seed);
      sc.jobs = r.integer("jobs", 1);
      sc.grid_points = r.integer("grid_points", 128);
      sc.dt = r.number("dt_us", 0.5) * 1e-6;
      if (Entry* g = r.find("g1d"); g && g->value != "auto") {
        sc.g1d = r.number(*g, g->value);
        if (*sc.g1d < 0) r.fail(g->line, "g1d must be >= 0");
      }
      sc.u_target_hz = r.number("u_target_hz", sc.u_target_hz);
      if (sc.jobs < 1) r.fail(sec.line, "jobs must be >= 1");
      if (sc.grid_points < 64 || (sc.grid_points & (sc.grid_points - 1)) != 0)
        r.fail(sec.line, "grid_points must be a power of two >= 64");
      if (!(sc.dt > 0)) r.fail(sec.line, "dt_us must be positive");
      if (!(sc.u_target_hz > 0)) r.fail(sec.line, "u_target_hz must be positive");
    } else if (k == "constants") {
      sc.constants.lambda = r.number("lambda_nm", sc.constants.lambda * 1e9) * 1e-9;
      sc.constants.mass = r.number("mass_kg", sc.constants.mass);
      sc.constants.a_s = r.number("a_s_nm", sc.constants.a_s * 1e9) * 1e-9;
      try {
        sc.constants.validate();
      } catch (const std::invalid_argument& e) {
        r.fail(sec.line, e.what());
      }
    } else if (k == "step") {
      sc.sequence.steps.push_back(read_step(r, sec.arg, sc));
      step_lines.push_back(sec.line);
    } else if (k == "sweep") {
      Entry* e = r.find("hold_us");
      if (!e) r.fail(sec.line, "[sweep] needs hold_us");
      for (double v : r.list(*e)) {
        if (v < 0) r.fail(e->line, "hold_us values must be >= 0");
        sc.holds.push_back(v * 1e-6);
      }
      have_sweep = true;
    } else if (k == "ensemble") {
      auto& en = sc.ensemble;
      en.n_sites = r.integer("n_sites", 1);
      en.n_shots = r.integer("n_shots", 1);
      en.occupancy.p_paired_site = r.number("p_paired_site", 1.0);
      en.occupancy.p_single = r.number("p_single", 0.0);
      en.noise.b0 = r.number("b0_T", en.noise.b0);
      en.noise.gradient_sigma_hz = r.number("gradient_sigma_hz", 0.0);
      const auto shot = r.maybe_number("shot_sigma_hz");
      const auto te = r.maybe_number("ramsey_te_us");
      if (shot && te) r.fail(sec.line, "give shot_sigma_hz or ramsey_te_us, not both");
      en.noise.shot_sigma_hz = shot.value_or(0.0);
      if (te) {
        if (!(*te > 0)) r.fail(sec.line, "ramsey_te_us must be positive");
        sc.ramsey_te = *te * 1e-6;
      }
      if (en.n_sites < 1 || en.n_shots < 1) r.fail(sec.line, "n_sites and n_shots must be >= 1");
      try {
        en.occupancy.validate();
        en.noise.validate();
      } catch (const DomainError& e) {
        r.fail(sec.line, e.what());
      }
    } else if (k == "levels") {
      sc.levels.ramp = r.text("ramp", sc.ramps.empty() ? std::string() : sc.ramps.front().first);
      if (Entry* e = r.find("times_us"))
        for (double v : r.list(*e)) sc.levels.times.push_back(v * 1e-6);
      sc.levels.n_modes = r.integer("n_modes", 8);
      sc.levels.interaction = r.boolean("interaction", true);
      if (sc.levels.n_modes < 2) r.fail(sec.line, "n_modes must be >= 2");
      have_levels = true;
      levels_line = sec.line;
    } else if (k == "basis") {
      Entry* e = r.find("states");
      if (!e) r.fail(sec.line, "[basis] needs states");
      for (const std::string& s : split_tokens(e->value)) {
        if (s != "0_L" && s != "1_L" && s != "0_R" && s != "1_R")
          r.fail(e->line, "basis state '" + s + "': expected 0_L, 1_L, 0_R or 1_R");
        sc.basis_states.push_back(s);
      }
    } else if (k == "output") {
      if (Entry* e = r.find("images_us"))
        for (double v : r.list(*e)) sc.image_holds.push_back(v * 1e-6);
      sc.image_displacement = r.integer("image_displacement", 8);
      if (sc.image_displacement < 0) r.fail(sec.line, "image_displacement must be >= 0");
    } else {
      r.fail(sec.line, "unknown section [" + k + "]");
    }
    r.finish();
  }

  if (!singletons.count("scenario")) throw ConfigError(src, 0, "missing [scenario] section");
  const bool needs_sequence = sc.experiment != Experiment::levels;
  if (needs_sequence || !sc.sequence.steps.empty()) {
    if (sc.sequence.steps.empty()) throw ConfigError(src, 0, "no [step ...] sections");
    try {
      sc.sequence.validate();
    } catch (const ValidationError& e) {
      std::size_t idx = 0;
      const int line = std::sscanf(e.what(), "step %zu", &idx) == 1 && idx >= 1 && idx <= step_lines.size()
                           ? step_lines[idx - 1]
                           : 0;
      throw ConfigError(src, line, e.what());
    }
  }
  if (sc.experiment == Experiment::oscillation) {
    bool swept = false;
    for (const Step& s : sc.sequence.steps)
      if (const auto* h = std::get_if<HoldStep>(&s)) swept = swept || h->sweep;
    if (!swept) throw ConfigError(src, 0, "oscillation experiment needs a [step hold] with sweep = true");
    if (!have_sweep) throw ConfigError(src, 0, "oscillation experiment needs a [sweep] section");
  }
  if (sc.experiment == Experiment::levels) {
    if (!have_levels) throw ConfigError(src, 0, "levels experiment needs a [levels] section");
    const int line = *levels_line;
    const RampSchedule* ramp = nullptr;
    for (const auto& [n, r] : sc.ramps)
      if (n == sc.levels.ramp) ramp = &r;
    if (!ramp) throw ConfigError(src, line, "[levels] ramp '" + sc.levels.ramp + "' is not declared");
    if (sc.levels.times.empty()) throw ConfigError(src, line, "[levels] needs times_us");
    for (double t : sc.levels.times)
      if (t < ramp->start() - 1e-12 || t > ramp->end() + 1e-12)
        throw ConfigError(src, line, "[levels] times_us must lie within the ramp");
  }
  if (sc.experiment == Experiment::basis && sc.basis_states.empty())
    throw ConfigError(src, 0, "basis experiment needs a [basis] section");
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), 0, "cannot open config file");
  return parse_scenario(is, path.string());
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1b", "fig2", "fig3", "fig4"};
  return names;
}

std::string emit_preset(const std::string& name, const Constants& c) {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown preset '" + name + "'; valid presets: " + list);
  }
  std::ostringstream os;
  auto num = [&](double v) {
    fmt(os, "%.17g", v);
  };
  const RampSchedule merge = defaults::merge_ramp(500e-6, c);

  const char* what = name == "fig1b"  ? "pair energy levels along the merge"
                     : name == "fig2" ? "single-atom basis states through the merge, band-mapped"
                     : name == "fig3" ? "exchange oscillation of |0_L,1_R> after the merge"
                                      : "exchange oscillation after a spin echo in the merged well";
  os << "# preset " << name << ": " << what << "\n\n";
  os << "[scenario]\n";
  os << "experiment = " << (name == "fig1b" ? "levels" : name == "fig2" ? "basis" : "oscillation") << "\n";
  os << "engine = " << (name == "fig2" ? "grid" : "mode") << "\n";
  os << "seed = 1\njobs = 1\ngrid_points = 128\ndt_us = 0.5\ng1d = auto\n";
  os << "u_target_hz = ";
  num(1e6 / 285.0);
  os << "\n\n";

  os << "[ramp merge]\ninterp = smoothstep\n";
  os << "# dtheta_spin_rad sets a 20 kHz L/R RF splitting in the preparation lattice\n";
  for (const RampKnot& k : merge.knots()) {
    os << "knot = t_us=";
    fmt(os, "%.10g", k.t * 1e6);
    os << " v_long_ER=";
    num(k.params.v_long);
    os << " v_short_ER=";
    num(k.params.v_short);
    os << " theta_rad=";
    num(k.params.theta);
    os << " dtheta_spin_rad=";
    num(k.params.dtheta_spin);
    os << "\n";
  }
  os << "\n";

  if (name == "fig1b") {
    os << "[levels]\nramp = merge\ntimes_us = 0:500:5\nn_modes = 8\ninteraction = true\n";
    return os.str();
  }

  if (name == "fig2") {
    os << "[step prepare]\n# replaced by each basis state below\nq_L = 0\np_R = none\n\n";
    os << "[step ramp]\nramp = merge\n\n[step measure]\n\n";
    os << "[basis]\nstates = 0_L, 1_L, 0_R, 1_R\n\n";
    os << "[output]\nimage_displacement = 8\n";
    return os.str();
  }

  os << "[step prepare]\nq_L = 0\np_R = 1\n\n";
  os << "[step ramp]\nramp = merge\n\n";
  if (name == "fig4") {
    os << "# echo in the merged well: pi/2, pi at the midpoint, pi/2 over 165 us\n";
    os << "[step pulse]\ntarget = both\narea = pi/2\nphase = 0\nrabi_hz = 4000\n\n";
    os << "[step hold]\nt_us = 82.5\n\n";
    os << "[step pulse]\ntarget = both\narea = pi\nphase = 0\nrabi_hz = 4000\n\n";
    os << "[step hold]\nt_us = 82.5\n\n";
    os << "[step pulse]\ntarget = both\narea = pi/2\nphase = 0\nrabi_hz = 4000\n\n";
  }
  os << "[step hold]\nsweep = true\n\n[step measure]\n\n";
  os << "[sweep]\nhold_us = 200:3000:20\n\n";
  os << "# half the sites hold a pair, half a single atom; common-mode field noise\n";
  os << "# gives a 150 us single-spin Ramsey 1/e time, plus a static per-site offset\n";
  os << "[ensemble]\nn_sites = 400\nn_shots = 1\np_paired_site = 0.5\np_single = 0.5\nramsey_te_us = 150\n";
  os << "gradient_sigma_hz = 2000\n\n";
  os << "[output]\nimages_us = 200, 340\nimage_displacement = 8\n";
  return os.str();
}

double resolve_g1d(const Scenario& s) {
  if (s.g1d) return *s.g1d;
  const RampSchedule* last = nullptr;
  for (const Step& st : s.sequence.steps)
    if (const auto* r = std::get_if<RampStep>(&st)) last = &r->ramp;
  if (!last && s.experiment == Experiment::levels) last = &s.ramp(s.levels.ramp);
  if (!last && !s.ramps.empty()) last = &s.ramps.back().second;
  if (!last) throw ValidationError("g1d = auto needs a ramp to calibrate on");
  const LatticeParams first = s.sequence.steps.empty() ? last->first() : s.sequence.initial_lattice();
  const Grid grid = cell_grid(first, s.grid_points);
  const SingleParticleSpectrum sp = solve_stationary(last->last(), Spin::zero, grid, 4);
  return calibrate_g1d(sp, InternalUnits(s.constants).hz_to_energy(s.u_target_hz));
}

namespace {

void write_oscillation_csv(const fs::path& p, const std::vector<MeasurementRecord>& pts) {
  std::ofstream os(p);
  os << "t_us,p0_e,p1_e,p0_g,p1_g\n";
  char buf[160];
  for (const auto& r : pts) {
    const auto& q = r.populations.p;
    std::snprintf(buf, sizeof buf, "%.6f,%.12f,%.12f,%.12f,%.12f\n", r.hold * 1e6, q[1][0], q[1][1], q[0][0], q[0][1]);
    os << buf;
  }
}

double series_value(const MeasurementRecord& r, int k) {
  const auto& q = r.populations.p;
  switch (k) {
    case 0: return q[1][0];
    case 1: return q[1][1];
    case 2: return q[0][0];
    default: return q[0][1];
  }
}

std::string hold_tag(double hold) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", hold * 1e6);
  return buf;
}

void write_image(const fs::path& dir, const std::string& stem, const SyntheticImage& img, std::vector<fs::path>& files) {
  const fs::path pgm = dir / (stem + ".pgm"), csv = dir / (stem + ".csv");
  {
    std::ofstream os(pgm, std::ios::binary);
    write_pgm(os, img);
  }
  std::ofstream os(csv);
  write_image_csv(os, img);
  files.push_back(pgm);
  files.push_back(csv);
}

}  // namespace

RunOutcome run_scenario(const Scenario& s, const RunOptions& o) {
  const Engine engine = o.engine.value_or(s.engine);
  const std::uint64_t seed = o.seed.value_or(s.seed);
  const int jobs = o.jobs.value_or(s.jobs);
  std::ostream* log = o.log;
  fs::create_directories(o.out);
  RunOutcome out;
  out.g1d = resolve_g1d(s);
  if (log) {
    *log << "experiment " << experiment_name(s.experiment) << ", engine " << engine_name(engine) << ", g1d ";
    fmt(*log, "%.6f", out.g1d);
    *log << " E_R/k_R\n";
  }
  RunSettings rs;
  rs.engine = engine;
  rs.n = s.grid_points;
  rs.dt = s.dt;
  rs.g1d = out.g1d;
  rs.constants = s.constants;

  if (s.experiment == Experiment::levels) {
    LevelSettings ls;
    ls.n = s.grid_points;
    ls.n_modes = s.levels.n_modes;
    ls.g1d = out.g1d;
    ls.with_interaction = s.levels.interaction;
    LevelTable t = eigenenergies_along_ramp(s.ramp(s.levels.ramp), s.levels.times, ls);
    const fs::path csv = o.out / "levels.csv";
    {
      std::ofstream os(csv);
      write_levels_csv(os, t);
    }
    out.files.push_back(csv);
    if (o.plots) {
      plot_svg(csv, "levels", o.out / "levels.svg");
      out.files.push_back(o.out / "levels.svg");
    }
    if (log) {
      for (const auto& w : t.warnings) *log << "warning: " << w << "\n";
      const auto& last = t.energy.back();
      *log << "final |0_L,1_R> / |1_L,0_R> gap ";
      fmt(*log, "%.4f", std::abs(last[2] - last[1]) * s.constants.recoil_hz());
      *log << " Hz\n";
    }
    out.levels = std::move(t);
    return out;
  }

  if (s.experiment == Experiment::basis) {
    const fs::path csv = o.out / "populations.csv";
    std::ofstream os(csv);
    os << "state,band,spin,population\n";
    for (const std::string& st : s.basis_states) {
      Sequence seq = s.sequence;
      const Spin spin = st[0] == '0' ? Spin::zero : Spin::one;
      PrepareStep prep;
      (st[2] == 'L' ? prep.q_L : prep.p_R) = spin;
      seq.steps.front() = prep;
      SequenceRunner runner(std::move(seq), rs);
      MeasurementRecord rec = runner.run();
      rec.occupancy = st;
      char buf[96];
      for (int b = 0; b < 3; ++b)
        for (int sp = 0; sp < 2; ++sp) {
          std::snprintf(buf, sizeof buf, "%s,%d,%d,%.12f\n", st.c_str(), b, sp, rec.populations.p[b][sp]);
          os << buf;
        }
      write_image(o.out, "image_" + st, render_image(rec, s.image_displacement), out.files);
      if (log) {
        const int band = st[2] == 'L' ? 1 : 0;
        *log << st << ": fraction in " << (band ? "e" : "g") << " ";
        fmt(*log, "%.4f", rec.populations.p[band][0] + rec.populations.p[band][1]);
        *log << "\n";
      }
      out.basis.emplace_back(st, rec);
    }
    out.files.push_back(csv);
    return out;
  }

  SequenceRunner runner(s.sequence, rs);
  EnsembleSettings e = s.ensemble;
  if (s.ramsey_te) e.noise.shot_sigma_hz = calibrate_shot_sigma(*s.ramsey_te);
  EnsembleResult res = run_ensemble(runner, e, s.holds, seed, jobs);
  out.points = std::move(res.points);
  const fs::path csv = o.out / "oscillation.csv";
  write_oscillation_csv(csv, out.points);
  out.files.push_back(csv);

  std::vector<double> t(out.points.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = out.points[i].hold;
  const fs::path report = o.out / "fit_report.csv";
  {
    std::ofstream os(report);
    os << "parameter,value,sigma\n";
    for (int k = 0; k < 4; ++k) {
      std::vector<double> y(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) y[i] = series_value(out.points[i], k);
      std::string why;
      try {
        out.fits[k] = fit_damped_sinusoid(t, y);
      } catch (const FitError& ex) {
        why = ex.what();
      } catch (const std::invalid_argument& ex) {
        why = ex.what();
      } catch (const std::logic_error& ex) {
        why = ex.what();
      }
      std::ostringstream block;
      if (out.fits[k]) write_fit_report(block, *out.fits[k]);
      std::string line;
      std::istringstream lines(block.str());
      std::getline(lines, line);  // header
      while (std::getline(lines, line)) os << kOscillationSeries[k] << ":" << line << "\n";
      os << kOscillationSeries[k] << ":converged," << (out.fits[k] ? 1 : 0) << ",0\n";
      if (log && !out.fits[k]) *log << kOscillationSeries[k] << ": no fit (" << why << ")\n";
    }
    if (out.fits[0]) {
      // A sinusoid of amplitude 1/4 in p0_e is a perfect per-atom swap.
      const double contrast = std::min(1.0, out.fits[0]->amplitude / 0.25);
      const double f = estimate_fidelity(contrast);
      os << "contrast,";
      fmt(os, "%.10g", contrast);
      os << ",0\nfidelity,";
      fmt(os, "%.10g", f);
      os << ",0\n";
      if (log) {
        *log << "p0_e period ";
        fmt(*log, "%.2f", out.fits[0]->period * 1e6);
        *log << " us, contrast ";
        fmt(*log, "%.3f", contrast);
        *log << ", fidelity " << format_fidelity(f) << "\n";
      }
    }
  }
  out.files.push_back(report);

  for (double h : s.image_holds) {
    if (out.points.empty()) break;
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.points.size(); ++i)
      if (std::abs(out.points[i].hold - h) < std::abs(out.points[best].hold - h)) best = i;
    write_image(o.out, "image_" + hold_tag(out.points[best].hold) + "us", render_image(out.points[best], s.image_displacement),
                out.files);
  }
  if (o.plots) {
    plot_svg(csv, "oscillation", o.out / "oscillation.svg");
    out.files.push_back(o.out / "oscillation.svg");
  }
  return out;
}

}  // namespace dws
