#include "fwm/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "fwm/error.hpp"

namespace fwm::io {

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::configuration, where + ": " + what);
}

// Reads the members of one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const Json& json, std::string where) : json_(json), where_(std::move(where)) {
    if (!json_.is_object()) config_error(where_, "expected an object");
  }

  bool has(const std::string& key) const { return json_.contains(key); }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!json_.contains(key)) config_error(where_, "missing key '" + key + "'");
    return json_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const Json& v = at(key);
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      config_error(where_ + "." + key, "wrong type");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return get<T>(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : json_.items())
      if (!seen_.count(key)) config_error(where_, "unknown key '" + key + "'");
  }

 private:
  const Json& json_;
  std::string where_;
  std::set<std::string> seen_;
};

cplx complex_from(const Json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  config_error(where, "expected a number or [re, im]");
}

Json complex_to(cplx c) { return Json::array({c.real(), c.imag()}); }

UniformGrid grid_from(const Json& v, const std::string& where) {
  Reader r(v, where);
  UniformGrid g;
  g.start = r.get<double>("start");
  g.step = r.get<double>("step");
  g.count = r.get<std::size_t>("count");
  r.finish();
  return g;
}

Json grid_to(const UniformGrid& g) { return Json{{"start", g.start}, {"step", g.step}, {"count", g.count}}; }

Eigen::MatrixXd matrix_from(const Json& v, const std::string& where, std::size_t rows, std::size_t cols) {
  if (!v.is_array() || v.size() != rows)
    config_error(where, "expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const Json& row = v[i];
    if (!row.is_array() || row.size() != cols)
      config_error(where, "row " + std::to_string(i) + " needs " + std::to_string(cols) + " entries");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!row[j].is_number()) config_error(where, "non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j].get<double>();
    }
  }
  return m;
}

Json matrix_to(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

const char* manifold_key(Manifold m) {
  switch (m) {
    case Manifold::ground: return "ground";
    case Manifold::a: return "a";
    case Manifold::b: return "b";
    case Manifold::c: return "c";
  }
  return "?";
}

std::vector<VibLevel> levels_from(const Json& v, const std::string& where) {
  Reader r(v, where);
  const auto energies = r.get<std::vector<double>>("energies_rad_per_tu");
  std::vector<double> widths(energies.size(), 0.0);
  if (r.has("widths_rad_per_tu")) {
    const Json& w = r.at("widths_rad_per_tu");
    if (w.is_number()) {
      widths.assign(energies.size(), w.get<double>());
    } else if (w.is_array() && w.size() == energies.size()) {
      widths = w.get<std::vector<double>>();
    } else {
      config_error(r.path("widths_rad_per_tu"), "expected a number or one width per level");
    }
  }
  r.finish();
  if (energies.empty()) config_error(where, "manifold has no levels");
  std::vector<VibLevel> out;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (!(widths[i] >= 0.0)) throw Error(ErrorKind::validation, where + ": widths must be >= 0");
    out.push_back({static_cast<int>(i), energies[i], widths[i]});
  }
  return out;
}

MolecularSystem system_from(const Json& v, const std::string& where) {
  Reader r(v, where);
  std::array<std::vector<VibLevel>, 4> levels;
  for (Manifold m : {Manifold::ground, Manifold::a, Manifold::b, Manifold::c})
    levels[static_cast<std::size_t>(m)] = levels_from(r.at(manifold_key(m)), r.path(manifold_key(m)));
  const auto n = [&](Manifold m) { return levels[static_cast<std::size_t>(m)].size(); };
  Reader d(r.at("dipoles"), r.path("dipoles"));
  DipoleTables t;
  t.a_ground = matrix_from(d.at("a_ground"), d.path("a_ground"), n(Manifold::a), n(Manifold::ground));
  t.a_b = matrix_from(d.at("a_b"), d.path("a_b"), n(Manifold::a), n(Manifold::b));
  t.b_c = matrix_from(d.at("b_c"), d.path("b_c"), n(Manifold::b), n(Manifold::c));
  t.c_ground = matrix_from(d.at("c_ground"), d.path("c_ground"), n(Manifold::c), n(Manifold::ground));
  d.finish();
  const auto unit = r.get<std::string>("time_unit", "tu");
  r.finish();
  return MolecularSystem(std::move(levels), std::move(t), unit);
}

Json system_to(const MolecularSystem& s) {
  Json out;
  for (Manifold m : {Manifold::ground, Manifold::a, Manifold::b, Manifold::c}) {
    std::vector<double> e, w;
    for (const auto& l : s.levels(m)) {
      e.push_back(l.energy);
      w.push_back(l.width);
    }
    out[manifold_key(m)] = Json{{"energies_rad_per_tu", e}, {"widths_rad_per_tu", w}};
  }
  const auto& d = s.dipoles();
  out["dipoles"] = Json{{"a_ground", matrix_to(d.a_ground)},
                        {"a_b", matrix_to(d.a_b)},
                        {"b_c", matrix_to(d.b_c)},
                        {"c_ground", matrix_to(d.c_ground)}};
  out["time_unit"] = s.unit_label();
  return out;
}

std::map<int, std::vector<int>> populated_from(const Json& v, const std::string& where) {
  if (!v.is_object()) config_error(where, "expected an object keyed by ground level");
  std::map<int, std::vector<int>> out;
  for (const auto& [key, ls] : v.items()) {
    int k = 0;
    try {
      k = std::stoi(key);
    } catch (const std::exception&) {
      config_error(where, "key '" + key + "' is not a level index");
    }
    try {
      out[k] = ls.get<std::vector<int>>();
    } catch (const nlohmann::json::exception&) {
      config_error(where + "." + key, "expected a list of a-level indices");
    }
  }
  return out;
}

Json populated_to(const std::map<int, std::vector<int>>& p) {
  Json out = Json::object();
  for (const auto& [k, ls] : p) out[std::to_string(k)] = ls;
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

PulseSpec pulse_from_json(const Json& json, const std::filesystem::path& base_dir) {
  Reader r(json, "pulse");
  const auto kind = pulse_kind_from_string(r.get<std::string>("kind"));
  const cplx amplitude = r.has("amplitude") ? complex_from(r.at("amplitude"), "pulse.amplitude") : cplx{1.0, 0.0};
  const auto phase = r.get<std::vector<double>>("phase", {});
  const bool perturbative = r.get<bool>("perturbative", true);
  PulseSpec p;
  switch (kind) {
    case PulseKind::gaussian:
      p = PulseSpec::gaussian(amplitude, r.get<double>("center_rad_per_tu"), r.get<double>("sigma_rad_per_tu"), phase);
      break;
    case PulseKind::flattop:
      p = PulseSpec::flattop(amplitude, r.get<double>("band_lo_rad_per_tu"), r.get<double>("band_hi_rad_per_tu"),
                             r.get<double>("edge_rad_per_tu", 0.0), phase);
      break;
    case PulseKind::tabulated:
      if (r.has("table_file")) {
        std::filesystem::path file = r.get<std::string>("table_file");
        if (file.is_relative()) file = base_dir / file;
        p = load_tabulated_pulse(file);
      } else {
        const Json& t = r.at("table");
        if (!t.is_array()) config_error("pulse.table", "expected rows [omega, re, im]");
        std::vector<double> w;
        std::vector<cplx> v;
        for (const auto& row : t) {
          if (!row.is_array() || row.size() < 2 || row.size() > 3)
            config_error("pulse.table", "expected rows [omega, re, im]");
          w.push_back(row[0].get<double>());
          v.emplace_back(row[1].get<double>(), row.size() == 3 ? row[2].get<double>() : 0.0);
        }
        p = PulseSpec::tabulated(std::move(w), std::move(v));
      }
      break;
  }
  p.perturbative = perturbative;
  r.finish();
  return p;
}

Json pulse_to_json(const PulseSpec& p) {
  Json out{{"kind", to_string(p.kind)}};
  switch (p.kind) {
    case PulseKind::gaussian:
      out["amplitude"] = complex_to(p.amplitude);
      out["center_rad_per_tu"] = p.center;
      out["sigma_rad_per_tu"] = p.sigma;
      break;
    case PulseKind::flattop:
      out["amplitude"] = complex_to(p.amplitude);
      out["band_lo_rad_per_tu"] = p.band_lo;
      out["band_hi_rad_per_tu"] = p.band_hi;
      out["edge_rad_per_tu"] = p.edge;
      break;
    case PulseKind::tabulated: {
      Json t = Json::array();
      for (std::size_t i = 0; i < p.table_omega.size(); ++i)
        t.push_back(Json::array({p.table_omega[i], p.table_value[i].real(), p.table_value[i].imag()}));
      out["table"] = t;
      break;
    }
  }
  if (!p.phase.empty()) out["phase"] = p.phase;
  out["perturbative"] = p.perturbative;
  return out;
}

Scenario scenario_from_json(const Json& json, const std::filesystem::path& base_dir) {
  Reader r(json, "scenario");
  Scenario s;
  s.name = r.get<std::string>("name", "scenario");
  s.system = system_from(r.at("system"), "system");
  if (r.has("temperature_rad_per_tu")) s.temperature = r.get<double>("temperature_rad_per_tu");
  if (r.has("populations")) {
    for (const auto& e : r.at("populations")) {
      Reader pr(e, "populations[]");
      s.populations.push_back({pr.get<int>("k"), pr.get<double>("p")});
      pr.finish();
    }
  }
  if (r.has("truth")) {
    const Json& t = r.at("truth");
    if (!t.is_object()) config_error("truth", "expected an object keyed by ground level");
    for (const auto& [key, rows] : t.items()) {
      const int k = std::stoi(key);
      BranchState b{k, {}};
      if (!rows.is_array()) config_error("truth." + key, "expected rows [l, re, im]");
      for (const auto& row : rows) {
        if (!row.is_array() || row.size() != 3) config_error("truth." + key, "expected rows [l, re, im]");
        b.coefficients[row[0].get<int>()] = {row[1].get<double>(), row[2].get<double>()};
      }
      s.truth[k] = b;
    }
  }
  if (r.has("pulse1")) s.pulse1 = pulse_from_json(r.at("pulse1"), base_dir);
  {
    Reader pr(r.at("probes"), "probes");
    s.probes.pulse2 = pulse_from_json(pr.at("pulse2"), base_dir);
    s.probes.pulse3 = pulse_from_json(pr.at("pulse3"), base_dir);
    pr.finish();
  }
  if (r.has("calibrations")) {
    for (const auto& c : r.at("calibrations")) {
      Reader cr(c, "calibrations[]");
      s.calibrations.push_back({cr.get<std::string>("id"), pulse_from_json(cr.at("pulse"), base_dir)});
      cr.finish();
    }
  }
  {
    Reader fr(r.at("forward"), "forward");
    auto& f = s.forward;
    f.omega = grid_from(fr.at("omega_grid_rad_per_tu"), "forward.omega_grid_rad_per_tu");
    f.tau = grid_from(fr.at("tau_grid_tu"), "forward.tau_grid_tu");
    f.omega2 = grid_from(fr.at("omega2_grid_rad_per_tu"), "forward.omega2_grid_rad_per_tu");
    f.gamma_eff = fr.get<double>("gamma_eff_rad_per_tu", 0.0);
    f.noise = fr.get<double>("noise_relative", 0.0);
    f.seed = fr.get<std::uint64_t>("seed", 1);
    f.counter_rotating = fr.get<bool>("counter_rotating", false);
    fr.finish();
  }
  if (r.has("reconstruction")) {
    Reader rr(r.at("reconstruction"), "reconstruction");
    auto& x = s.reconstruction;
    x.method = rr.get<std::string>("method", x.method);
    x.eps_iso = rr.get<double>("eps_iso", x.eps_iso);
    x.eps_use = rr.get<double>("eps_use", x.eps_use);
    x.delta_omega = rr.get<double>("delta_omega_rad_per_tu", x.delta_omega);
    x.temperatures = rr.get<std::vector<double>>("temperatures_rad_per_tu", {});
    if (rr.has("populated")) x.populated = populated_from(rr.at("populated"), "reconstruction.populated");
    rr.finish();
  }
  if (r.has("oracle")) {
    Reader orr(r.at("oracle"), "oracle");
    auto& o = s.oracle;
    o.tau = orr.get<std::vector<double>>("tau_tu", {});
    o.config.t_start = orr.get<double>("t_start_tu", o.config.t_start);
    o.config.t_end = orr.get<double>("t_end_tu", o.config.t_end);
    o.config.dt = orr.get<double>("dt_tu", o.config.dt);
    o.config.gamma_eff = orr.get<double>("gamma_eff_rad_per_tu", o.config.gamma_eff);
    orr.finish();
  }
  r.finish();
  s.validate();
  return s;
}

Json scenario_to_json(const Scenario& s) {
  Json out{{"name", s.name}, {"system", system_to(s.system)}};
  if (s.temperature) out["temperature_rad_per_tu"] = *s.temperature;
  if (!s.populations.empty()) {
    Json p = Json::array();
    for (const auto& e : s.populations) p.push_back(Json{{"k", e.k}, {"p", e.population}});
    out["populations"] = p;
  }
  if (!s.truth.empty()) {
    Json t = Json::object();
    for (const auto& [k, b] : s.truth) {
      Json rows = Json::array();
      for (const auto& [l, c] : b.coefficients) rows.push_back(Json::array({l, c.real(), c.imag()}));
      t[std::to_string(k)] = rows;
    }
    out["truth"] = t;
  }
  if (s.pulse1) out["pulse1"] = pulse_to_json(*s.pulse1);
  out["probes"] = Json{{"pulse2", pulse_to_json(s.probes.pulse2)}, {"pulse3", pulse_to_json(s.probes.pulse3)}};
  Json cals = Json::array();
  for (const auto& c : s.calibrations) cals.push_back(Json{{"id", c.id}, {"pulse", pulse_to_json(c.pulse)}});
  out["calibrations"] = cals;
  const auto& f = s.forward;
  out["forward"] = Json{{"omega_grid_rad_per_tu", grid_to(f.omega)},
                        {"tau_grid_tu", grid_to(f.tau)},
                        {"omega2_grid_rad_per_tu", grid_to(f.omega2)},
                        {"gamma_eff_rad_per_tu", f.gamma_eff},
                        {"noise_relative", f.noise},
                        {"seed", f.seed},
                        {"counter_rotating", f.counter_rotating}};
  const auto& x = s.reconstruction;
  out["reconstruction"] = Json{{"method", x.method},
                               {"eps_iso", x.eps_iso},
                               {"eps_use", x.eps_use},
                               {"delta_omega_rad_per_tu", x.delta_omega},
                               {"temperatures_rad_per_tu", x.temperatures},
                               {"populated", populated_to(x.populated)}};
  const auto& o = s.oracle;
  out["oracle"] = Json{{"tau_tu", o.tau},
                       {"t_start_tu", o.config.t_start},
                       {"t_end_tu", o.config.t_end},
                       {"dt_tu", o.config.dt},
                       {"gamma_eff_rad_per_tu", o.config.gamma_eff}};
  return out;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open scenario file " + path.string());
  Json json;
  try {
    json = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::configuration, path.string() + ": " + e.what());
  }
  return scenario_from_json(json, path.parent_path());
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  write_text_file(path, scenario_to_json(scenario).dump(2) + "\n");
}

void write_spectrogram(std::ostream& out, const Spectrogram& s) {
  out << "# fwm spectrogram\n";
  out << "# omega_start_rad_per_tu: " << format_double(s.omega.start) << "\n";
  out << "# omega_step_rad_per_tu: " << format_double(s.omega.step) << "\n";
  out << "# omega_count: " << s.omega.count << "\n";
  out << "# tau_start_tu: " << format_double(s.tau.start) << "\n";
  out << "# tau_step_tu: " << format_double(s.tau.step) << "\n";
  out << "# tau_count: " << s.tau.count << "\n";
  out << "# seed: " << s.seed << "\n";
  out << "# noise_relative: " << format_double(s.noise) << "\n";
  if (s.temperature) out << "# temperature_rad_per_tu: " << format_double(*s.temperature) << "\n";
  out << "# rows: omega, columns: tau\n";
  for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(s.values(i, j));
    }
    out << '\n';
  }
}

Spectrogram read_spectrogram(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> header;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto key = line.substr(1, colon - 1);
      key.erase(0, key.find_first_not_of(' '));
      auto value = line.substr(colon + 1);
      value.erase(0, value.find_first_not_of(' '));
      header[key] = value;
      continue;
    }
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw Error(ErrorKind::io, source + ": malformed value '" + tok + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto need = [&](const std::string& key) {
    auto it = header.find(key);
    if (it == header.end()) throw Error(ErrorKind::io, source + ": header lacks '" + key + "'");
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw Error(ErrorKind::io, source + ": bad header value for '" + key + "'");
    }
  };
  Spectrogram s;
  s.omega = {need("omega_start_rad_per_tu"), need("omega_step_rad_per_tu"),
             static_cast<std::size_t>(need("omega_count"))};
  s.tau = {need("tau_start_tu"), need("tau_step_tu"), static_cast<std::size_t>(need("tau_count"))};
  if (header.count("seed")) s.seed = std::stoull(header["seed"]);
  if (header.count("noise_relative")) s.noise = need("noise_relative");
  if (header.count("temperature_rad_per_tu")) s.temperature = need("temperature_rad_per_tu");
  if (rows.size() != s.omega.count)
    throw Error(ErrorKind::io, source + ": expected " + std::to_string(s.omega.count) + " rows, found " +
                                   std::to_string(rows.size()));
  s.values.resize(static_cast<Eigen::Index>(s.omega.count), static_cast<Eigen::Index>(s.tau.count));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != s.tau.count)
      throw Error(ErrorKind::io, source + ": row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                     " columns, expected " + std::to_string(s.tau.count));
    for (std::size_t j = 0; j < s.tau.count; ++j)
      s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return s;
}

void save_spectrogram(const Spectrogram& spectrogram, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_spectrogram(ss, spectrogram);
  write_text_file(path, ss.str());
}

Spectrogram load_spectrogram(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open spectrogram file " + path.string());
  return read_spectrogram(in, path.string());
}

void write_product_table(std::ostream& out, const ProductTable& table, const std::string& run) {
  out << "# run w omega Omega k k' l l' Re Im cond degenerate quotient\n";
  for (const auto& e : table.entries) {
    out << run << ' ' << e.omega_index << ' ' << format_double(e.omega) << ' ' << format_double(e.beat) << ' '
        << e.index.k << ' ' << e.index.kp << ' ' << e.index.l << ' ' << e.index.lp << ' '
        << format_double(e.value.real()) << ' ' << format_double(e.value.imag()) << ' '
        << format_double(e.condition) << ' ' << (e.degenerate ? 1 : 0) << ' ' << (e.quotient_derived ? 1 : 0)
        << '\n';
  }
  for (const auto& d : table.discarded) out << "# discarded: " << d << '\n';
}

ProductTable read_product_table(std::istream& in, const std::string& source) {
  ProductTable table;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# discarded: ", 0) == 0) table.discarded.push_back(line.substr(13));
      continue;
    }
    std::istringstream ss(line);
    std::string run;
    ProductEntry e;
    double re = 0.0, im = 0.0;
    int degenerate = 0, quotient = 0;
    if (!(ss >> run >> e.omega_index >> e.omega >> e.beat >> e.index.k >> e.index.kp >> e.index.l >> e.index.lp >>
          re >> im >> e.condition >> degenerate >> quotient))
      throw Error(ErrorKind::io, source + ": malformed product row " + std::to_string(row));
    e.value = {re, im};
    e.degenerate = degenerate != 0;
    e.quotient_derived = quotient != 0;
    table.entries.push_back(e);
  }
  return table;
}

void write_calibration(std::ostream& out, const LinkedCalibration& c) {
  out << "# fwm calibration\n# runs:";
  for (std::size_t i = 0; i < c.run_ids.size(); ++i) out << ' ' << c.run_ids[i] << '=' << format_double(c.scales[i]);
  out << "\n# link residual: " << format_double(c.residual) << '\n';
  for (const auto& l : c.link_log) out << "# log: " << l << '\n';
  write_product_table(out, c.products, "linked");
}

LinkedCalibration read_calibration(std::istream& in, const std::string& source) {
  std::stringstream body;
  LinkedCalibration c;
  std::string line;
  bool tagged = false;
  while (std::getline(in, line)) {
    if (line == "# fwm calibration") {
      tagged = true;
    } else if (line.rfind("# runs:", 0) == 0) {
      std::istringstream ss(line.substr(7));
      std::string item;
      while (ss >> item) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::io, source + ": malformed run list");
        c.run_ids.push_back(item.substr(0, eq));
        c.scales.push_back(std::stod(item.substr(eq + 1)));
      }
    } else if (line.rfind("# link residual:", 0) == 0) {
      c.residual = std::stod(line.substr(16));
    } else if (line.rfind("# log: ", 0) == 0) {
      c.link_log.push_back(line.substr(7));
    } else {
      body << line << '\n';
    }
  }
  if (!tagged) throw Error(ErrorKind::io, source + ": not a calibration table");
  c.products = read_product_table(body, source);
  return c;
}

LinkedCalibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open calibration file " + path.string());
  return read_calibration(in, path.string());
}

void write_beat_spectrum(std::ostream& out, const BeatFit& fit) {
  out << "# |amplitude| of S/w^4 per beat line\n# omega";
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fit.lines.size(); ++i)
    if (fit.lines[i].omega >= 0.0) {
      rows.push_back(i);
      out << ' ' << format_double(fit.lines[i].omega);
    }
  out << '\n';
  for (std::size_t w = 0; w < fit.omega.count; ++w) {
    out << format_double(fit.omega[w]);
    for (std::size_t i : rows)
      out << ' ' << format_double(std::abs(fit.amplitude(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w))));
    out << '\n';
  }
}

void write_report(std::ostream& out, const ReconstructionReport& report) {
  for (const auto& b : report.branches) {
    out << "branch k=" << b.k << " method " << b.method;
    if (b.fidelity) out << " fidelity " << std::setprecision(10) << *b.fidelity;
    out << '\n';
    out << "  closure residual " << std::setprecision(4) << b.closure_residual << ", edges " << b.edges_used
        << ", omega points " << b.omega_used << '\n';
    if (b.parity_ambiguous) out << "  parity ambiguous: even/odd magnitudes not separable\n";
    if (!b.unconstrained.empty()) {
      out << "  unconstrained levels:";
      for (int l : b.unconstrained) out << ' ' << l;
      out << '\n';
    }
    for (const auto& [l, c] : b.estimate.coefficients)
      out << "  l=" << l << "  " << std::setprecision(10) << c.real() << (c.imag() < 0 ? " - " : " + ")
          << std::abs(c.imag()) << "i  |b|=" << std::abs(c) << '\n';
    for (const auto& n : b.notes) out << "  note: " << n << '\n';
  }
  for (const auto& d : report.diagnostics) out << "diagnostic: " << d << '\n';
}

Json report_to_json(const ReconstructionReport& report) {
  Json branches = Json::array();
  for (const auto& b : report.branches) {
    Json coeff = Json::array();
    for (const auto& [l, c] : b.estimate.coefficients) coeff.push_back(Json::array({l, c.real(), c.imag()}));
    Json j{{"k", b.k},
           {"method", b.method},
           {"coefficients", coeff},
           {"parity_ambiguous", b.parity_ambiguous},
           {"closure_residual", b.closure_residual},
           {"unconstrained", b.unconstrained},
           {"edges_used", b.edges_used},
           {"omega_used", b.omega_used},
           {"notes", b.notes}};
    if (b.fidelity) j["fidelity"] = *b.fidelity;
    branches.push_back(j);
  }
  return Json{{"branches", branches}, {"diagnostics", report.diagnostics}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::io, "cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace fwm::io
