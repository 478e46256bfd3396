#include "gcmp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gcmp/error.hpp"

namespace gcmp::io {

using json = nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(path + ": cannot open file");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Ctx {
 public:
  Ctx(std::string source, std::string path) : source_(std::move(source)), path_(std::move(path)) {}
  Ctx operator/(const std::string& key) const {
    return {source_, path_.empty() ? key : path_ + "." + key};
  }
  Ctx operator/(std::size_t i) const { return {source_, path_ + "[" + std::to_string(i) + "]"}; }
  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidInput(source_ + ": field '" + path_ + "': " + what);
  }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::string path_;
};

const json& need(const json& j, const std::string& key, const Ctx& ctx) {
  if (!j.is_object()) ctx.fail("expected an object");
  const auto it = j.find(key);
  if (it == j.end()) (ctx / key).fail("missing");
  return *it;
}

double num(const json& j, const Ctx& ctx) {
  if (!j.is_number()) ctx.fail("expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) ctx.fail("expected a finite number");
  return x;
}

std::string str(const json& j, const Ctx& ctx) {
  if (!j.is_string()) ctx.fail("expected a string");
  return j.get<std::string>();
}

std::vector<double> nums(const json& j, const Ctx& ctx) {
  if (!j.is_array()) ctx.fail("expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(num(j[i], ctx / i));
  return v;
}

double num_or(const json& j, const std::string& key, double fallback, const Ctx& ctx) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : num(*it, ctx / key);
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(source + ": malformed JSON: " + e.what());
  }
}

// Catalog form: {"family": "constant", "rate": 0.1} and friends.
BaselineSpec baseline_values(const json& j, const Ctx& ctx) {
  const std::string family = str(need(j, "family", ctx), ctx / "family");
  if (family == "constant") return BaselineSpec::constant(num(need(j, "rate", ctx), ctx / "rate"));
  if (family == "weibull") {
    return BaselineSpec::weibull(num(need(j, "scale", ctx), ctx / "scale"),
                                 num(need(j, "shape", ctx), ctx / "shape"));
  }
  if (family == "piecewise_constant") {
    auto cuts = nums(need(j, "cuts", ctx), ctx / "cuts");
    auto rates = nums(need(j, "rates", ctx), ctx / "rates");
    if (rates.size() != cuts.size() + 1) (ctx / "rates").fail("need one rate per piece");
    return BaselineSpec::piecewise_constant(std::move(cuts), std::move(rates));
  }
  (ctx / "family").fail("unknown family '" + family + "'");
}

BaselineSpec baseline_field(const json& j, const std::string& key, const Ctx& ctx,
                            std::optional<BaselineSpec> fallback = std::nullopt) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    (ctx / key).fail("missing");
  }
  if (it->is_number()) return BaselineSpec::constant(num(*it, ctx / key));
  return baseline_values(*it, ctx / key);
}

// Parametric form: baseline parameters referenced by name.
struct ParamTable {
  std::vector<Parameter> params;
  std::vector<double> natural;
  std::map<std::string, std::size_t> index;

  std::size_t find(const json& j, const Ctx& ctx) const {
    const std::string name = str(j, ctx);
    const auto it = index.find(name);
    if (it == index.end()) ctx.fail("unknown parameter '" + name + "'");
    return it->second;
  }
};

ParamTable parameters(const json& j, const Ctx& ctx) {
  ParamTable t;
  if (!j.is_array()) ctx.fail("expected an array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Ctx c = ctx / i;
    const std::string name = str(need(j[i], "name", c), c / "name");
    Scale scale = Scale::log;
    if (const auto it = j[i].find("scale"); it != j[i].end()) {
      const std::string s = str(*it, c / "scale");
      if (s == "identity") {
        scale = Scale::identity;
      } else if (s != "log") {
        (c / "scale").fail("expected 'log' or 'identity'");
      }
    }
    const double value = num(need(j[i], "value", c), c / "value");
    if (scale == Scale::log && !(value > 0.0)) (c / "value").fail("log-scale value must be > 0");
    if (t.index.count(name)) (c / "name").fail("duplicate parameter '" + name + "'");
    t.index[name] = t.params.size();
    t.params.push_back({name, scale});
    t.natural.push_back(value);
  }
  return t;
}

Baseline baseline_ref(const json& j, const ParamTable& t, const Ctx& ctx) {
  const std::string family = str(need(j, "family", ctx), ctx / "family");
  if (family == "constant") return Baseline::constant(t.find(need(j, "rate", ctx), ctx / "rate"));
  if (family == "weibull") {
    return Baseline::weibull(t.find(need(j, "scale", ctx), ctx / "scale"),
                             t.find(need(j, "shape", ctx), ctx / "shape"));
  }
  if (family == "piecewise_constant") {
    const auto& rates = need(j, "rates", ctx);
    if (!rates.is_array()) (ctx / "rates").fail("expected an array of parameter names");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rates.size(); ++i) idx.push_back(t.find(rates[i], ctx / "rates" / i));
    auto cuts = nums(need(j, "cuts", ctx), ctx / "cuts");
    if (idx.size() != cuts.size() + 1) (ctx / "rates").fail("need one rate per piece");
    return Baseline::piecewise_constant(std::move(cuts), std::move(idx));
  }
  (ctx / "family").fail("unknown family '" + family + "'");
}

std::vector<std::string> names(const json& j, const Ctx& ctx) {
  if (!j.is_array() || j.empty()) ctx.fail("expected a non-empty array of names");
  std::vector<std::string> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(str(j[i], ctx / i));
  return v;
}

std::size_t name_index(const std::vector<std::string>& list, const json& j, const Ctx& ctx) {
  const std::string name = str(j, ctx);
  const auto it = std::find(list.begin(), list.end(), name);
  if (it == list.end()) ctx.fail("unknown name '" + name + "'");
  return static_cast<std::size_t>(it - list.begin());
}

LoadedModel catalog_model(const json& j, const Ctx& root) {
  const std::string name = str(need(j, "catalog", root), root / "catalog");
  LoadedModel out;
  if (name == "illness_death" || name == "illness_death_hybrid") {
    auto id = illness_death(baseline_field(j, "a01", root), baseline_field(j, "a02", root),
                            baseline_field(j, "a12", root));
    out.model = std::move(id.model);
    out.markov = std::move(id.spec);
    if (name == "illness_death_hybrid") {
      const double C = num(need(j, "horizon", root), root / "horizon");
      const double v1 = num(need(j, "hospital_end", root), root / "hospital_end");
      auto visits = nums(need(j, "visits", root), root / "visits");
      out.scheme = hybrid_scheme(v1, std::move(visits), C);
    }
    return out;
  }
  if (name == "dementia") {
    DementiaParams d;
    d.a01 = baseline_field(j, "a01", root, d.a01);
    d.a02 = baseline_field(j, "a02", root, d.a02);
    d.a04 = baseline_field(j, "a04", root, d.a04);
    double* fields[] = {&d.eta1_2,   &d.eta2_1,   &d.eta3_1,   &d.eta3_2, &d.eta3_12,
                        &d.gamma1_2, &d.gamma2_1, &d.gamma3_1, &d.gamma3_2,
                        &d.beta1,    &d.beta2,    &d.beta3,    &d.z};
    const char* keys[] = {"eta1_2",   "eta2_1",   "eta3_1",   "eta3_2", "eta3_12",
                          "gamma1_2", "gamma2_1", "gamma3_1", "gamma3_2",
                          "beta1",    "beta2",    "beta3",    "z"};
    for (std::size_t i = 0; i < std::size(keys); ++i) *fields[i] = num_or(j, keys[i], 0.0, root);
    out.model = dementia_model(d);
    const bool markov = d.gamma1_2 == 0.0 && d.gamma2_1 == 0.0 && d.gamma3_1 == 0.0 &&
                        d.gamma3_2 == 0.0 && (d.z == 0.0 || (d.beta1 == 0.0 && d.beta2 == 0.0 &&
                                                             d.beta3 == 0.0));
    if (markov) out.markov = dementia_markov_spec(d);
    if (j.contains("visits") && j.contains("horizon")) {
      out.scheme = dementia_scheme(nums(j["visits"], root / "visits"),
                                   num(j["horizon"], root / "horizon"));
    }
    return out;
  }
  (root / "catalog").fail("unknown catalog model '" + name + "'");
}

LoadedModel markov_model(const json& j, const Ctx& root) {
  const auto comps = names(need(j, "components", root), root / "components");
  const bool compact = j.value("compact", false);
  const std::size_t states = static_cast<std::size_t>(num(need(j, "states", root), root / "states"));
  const ParamTable t = parameters(need(j, "parameters", root), root / "parameters");
  const auto& trs = need(j, "transitions", root);
  if (!trs.is_array()) (root / "transitions").fail("expected an array");
  std::vector<Transition> list;
  for (std::size_t i = 0; i < trs.size(); ++i) {
    const Ctx c = root / "transitions" / i;
    Transition tr;
    tr.from = static_cast<std::size_t>(num(need(trs[i], "from", c), c / "from"));
    tr.to = static_cast<std::size_t>(num(need(trs[i], "to", c), c / "to"));
    tr.baseline = baseline_ref(need(trs[i], "baseline", c), t, c / "baseline");
    if (const auto it = trs[i].find("log_multipliers"); it != trs[i].end()) {
      if (!it->is_array()) (c / "log_multipliers").fail("expected an array of parameter names");
      for (std::size_t k = 0; k < it->size(); ++k) {
        tr.log_multipliers.push_back(t.find((*it)[k], c / "log_multipliers" / k));
      }
    }
    list.push_back(std::move(tr));
  }
  MarkovSpec spec(states, comps, compact, t.params, std::move(list), unconstrained(t.params, t.natural));
  LoadedModel out;
  out.model = markov_to_ojc(spec);
  out.markov = std::move(spec);
  return out;
}

LoadedModel intensity_model(const json& j, const Ctx& root) {
  const auto comps = names(need(j, "components", root), root / "components");
  std::vector<std::string> covs;
  if (j.contains("covariates")) covs = names(j["covariates"], root / "covariates");
  const ParamTable t = parameters(need(j, "parameters", root), root / "parameters");
  const auto& ints = need(j, "intensities", root);
  if (!ints.is_object()) (root / "intensities").fail("expected an object keyed by component");
  std::vector<std::vector<Term>> terms(comps.size());
  for (const auto& [key, list] : ints.items()) {
    const Ctx ck = root / "intensities" / key;
    const std::size_t jc = name_index(comps, json(key), ck);
    if (!list.is_array()) ck.fail("expected an array of terms");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Ctx c = ck / i;
      Term term;
      term.baseline = baseline_ref(need(list[i], "baseline", c), t, c / "baseline");
      if (const auto g = list[i].find("gate"); g != list[i].end()) {
        if (!g->is_object()) (c / "gate").fail("expected {component: jumped}");
        for (const auto& [gk, gv] : g->items()) {
          if (!gv.is_boolean()) (c / "gate" / gk).fail("expected true or false");
          term.gate.require.emplace_back(name_index(comps, json(gk), c / "gate"), gv.get<bool>());
        }
      }
      if (const auto es = list[i].find("effects"); es != list[i].end()) {
        if (!es->is_array()) (c / "effects").fail("expected an array");
        for (std::size_t k = 0; k < es->size(); ++k) {
          const Ctx ce = c / "effects" / k;
          const auto& e = (*es)[k];
          Effect eff;
          const std::string kind = str(need(e, "kind", ce), ce / "kind");
          eff.parameter = t.find(need(e, "parameter", ce), ce / "parameter");
          if (kind == "constant") {
            eff.kind = Effect::Kind::constant;
          } else if (kind == "indicator" || kind == "duration") {
            eff.kind = kind == "indicator" ? Effect::Kind::indicator : Effect::Kind::duration;
            const auto& on = need(e, "components", ce);
            if (!on.is_array()) (ce / "components").fail("expected an array of names");
            for (std::size_t m = 0; m < on.size(); ++m) {
              eff.components.push_back(name_index(comps, on[m], ce / "components" / m));
            }
          } else if (kind == "covariate") {
            eff.kind = Effect::Kind::covariate;
            eff.covariate = name_index(covs, need(e, "covariate", ce), ce / "covariate");
          } else {
            (ce / "kind").fail("unknown effect kind '" + kind + "'");
          }
          term.effects.push_back(std::move(eff));
        }
      }
      terms[jc].push_back(std::move(term));
    }
  }
  LoadedModel out;
  out.model = IntensityModel(comps, t.params, std::move(terms), unconstrained(t.params, t.natural),
                             covs);
  if (j.contains("death_component")) {
    out.model = out.model.with_death_component(
        name_index(comps, j["death_component"], root / "death_component"));
  }
  return out;
}

}  // namespace

LoadedModel parse_model(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  const Ctx root(source, "");
  if (!j.is_object()) root.fail("model configuration must be a JSON object");
  LoadedModel out;
  try {
    if (j.contains("catalog")) {
      out = catalog_model(j, root);
    } else {
      const std::string type = str(need(j, "type", root), root / "type");
      if (type == "markov") {
        out = markov_model(j, root);
      } else if (type == "intensities") {
        out = intensity_model(j, root);
      } else {
        (root / "type").fail("expected 'markov' or 'intensities'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInput(source + ": " + e.what());
  } catch (const InvalidInput&) {
    throw;
  } catch (const Error& e) {
    throw InvalidInput(source + ": " + e.what());
  }
  if (const auto it = j.find("time_unit"); it != j.end()) out.time_unit = str(*it, root / "time_unit");
  return out;
}

LoadedModel load_model(const std::string& path) { return parse_model(read_file(path), path); }

ObservationScheme parse_scheme(const std::string& text, const IntensityModel& model,
                               const std::string& source) {
  const json j = parse_json(text, source);
  const Ctx root(source, "");
  ObservationScheme s;
  try {
    s.horizon = num(need(j, "horizon", root), root / "horizon");
    if (!(s.horizon > 0.0)) (root / "horizon").fail("must be positive");
    const auto& names = model.component_names();
    if (const auto it = j.find("death_component"); it != j.end()) {
      s.death_component = name_index(names, *it, root / "death_component");
    } else {
      s.death_component = model.death_component();
    }
    const auto& comps = need(j, "components", root);
    if (!comps.is_object()) (root / "components").fail("expected an object keyed by component");
    s.components.resize(names.size());
    std::vector<bool> seen(names.size(), false);
    for (const auto& [key, c] : comps.items()) {
      const Ctx ck = root / "components" / key;
      const std::size_t jc = name_index(names, json(key), ck);
      seen[jc] = true;
      auto& sched = s.components[jc];
      if (c.value("continuous", false)) sched.windows.push_back({0.0, s.horizon});
      if (const auto w = c.find("windows"); w != c.end()) {
        if (!w->is_array()) (ck / "windows").fail("expected an array of [begin, end] pairs");
        for (std::size_t i = 0; i < w->size(); ++i) {
          const auto pair = nums((*w)[i], ck / "windows" / i);
          if (pair.size() != 2) (ck / "windows" / i).fail("expected [begin, end]");
          sched.windows.push_back({pair[0], pair[1]});
        }
      }
      if (const auto v = c.find("visits"); v != c.end()) sched.visits = nums(*v, ck / "visits");
      if (const auto v = c.find("visit_every"); v != c.end()) {
        const auto extra = regular_visits(num(*v, ck / "visit_every"), s.horizon);
        sched.visits.insert(sched.visits.end(), extra.begin(), extra.end());
        std::sort(sched.visits.begin(), sched.visits.end());
        sched.visits.erase(std::unique(sched.visits.begin(), sched.visits.end()),
                           sched.visits.end());
      }
      sched.retrospective = c.value("retrospective", false);
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (!seen[k]) (root / "components" / names[k]).fail("missing schedule for component");
    }
    validate(s);
  } catch (const json::exception& e) {
    throw InvalidInput(source + ": " + e.what());
  } catch (const InvalidInput& e) {
    const std::string what = e.what();
    if (what.rfind(source, 0) == 0) throw;
    throw InvalidInput(source + ": " + what);
  }
  return s;
}

ObservationScheme load_scheme(const std::string& path, const IntensityModel& model) {
  return parse_scheme(read_file(path), model, path);
}

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& where) {
  if (text == "inf") return no_jump;
  if (text == "-inf") return minus_infinity;
  double x = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, x);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw InvalidInput(where + ": expected a number, got '" + text + "'");
  }
  return x;
}

Eigen::VectorXd parse_theta(const std::string& text, std::size_t expected) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(parse_double(item, "--theta"));
  if (v.size() != expected) {
    throw InvalidInput("--theta: expected " + std::to_string(expected) + " values, got " +
                       std::to_string(v.size()));
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  out.push_back(cell);
  return out;
}

}  // namespace

void write_dataset(std::ostream& out, const IntensityModel& model, const Dataset& data) {
  out << "subject_id,component,status,t1,t2";
  for (const auto& c : model.covariate_names()) out << ',' << c;
  const bool has_entry = std::any_of(data.subjects.begin(), data.subjects.end(),
                                     [](const Subject& s) { return s.entry != 0.0; });
  if (has_entry) out << ",entry";
  out << '\n';
  for (const auto& s : data.subjects) {
    for (std::size_t j = 0; j < model.components(); ++j) {
      out << s.id << ',' << model.component_names()[j] << ',';
      const auto& c = s.atom.components.at(j);
      if (const auto* e = std::get_if<Exact>(&c)) {
        out << (e->observed ? "exact," : "exact_censored,") << format_double(e->time) << ',';
      } else if (const auto* iv = std::get_if<Interval>(&c)) {
        out << "interval," << format_double(iv->lower) << ',' << format_double(iv->upper);
      } else {
        out << "survived_beyond," << format_double(std::get<SurvivedBeyond>(c).last) << ',';
      }
      for (std::size_t k = 0; k < model.covariate_names().size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        out << ',' << format_double(idx < s.covariates.size() ? s.covariates[idx] : 0.0);
      }
      if (has_entry) out << ',' << format_double(s.entry);
      out << '\n';
    }
  }
}

Dataset read_dataset(std::istream& in, const IntensityModel& model, double horizon,
                     const std::string& source) {
  Dataset data;
  data.horizon = horizon;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw InvalidInput(source + ": empty file, header row required");
  ++lineno;
  const auto header = split_csv(line);
  const std::vector<std::string> fixed{"subject_id", "component", "status", "t1", "t2"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw InvalidInput(source + ":1: header must start with subject_id,component,status,t1,t2");
  }
  const auto& covs = model.covariate_names();
  std::vector<int> cov_col(covs.size(), -1);
  int entry_col = -1;
  for (std::size_t c = fixed.size(); c < header.size(); ++c) {
    if (header[c] == "entry") {
      entry_col = static_cast<int>(c);
      continue;
    }
    const auto it = std::find(covs.begin(), covs.end(), header[c]);
    if (it == covs.end()) {
      throw InvalidInput(source + ":1: column '" + header[c] + "' is not a model covariate");
    }
    cov_col[static_cast<std::size_t>(it - covs.begin())] = static_cast<int>(c);
  }
  for (std::size_t k = 0; k < covs.size(); ++k) {
    if (cov_col[k] < 0) throw InvalidInput(source + ":1: missing covariate column '" + covs[k] + "'");
  }

  const std::size_t p = model.components();
  std::map<std::string, std::size_t> where;
  std::vector<std::vector<bool>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    const std::string at = source + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) {
      throw InvalidInput(at + ": expected " + std::to_string(header.size()) + " fields, got " +
                         std::to_string(cells.size()));
    }
    const std::string& id = cells[0];
    if (id.empty()) throw InvalidInput(at + ": field 'subject_id' is empty");
    auto [it, fresh] = where.try_emplace(id, data.subjects.size());
    if (fresh) {
      Subject s;
      s.id = id;
      s.atom.components.assign(p, SurvivedBeyond{0.0});
      s.covariates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(covs.size()));
      for (std::size_t k = 0; k < covs.size(); ++k) {
        s.covariates[static_cast<Eigen::Index>(k)] =
            parse_double(cells[static_cast<std::size_t>(cov_col[k])], at + ": field '" + covs[k] + "'");
      }
      if (entry_col >= 0) {
        s.entry = parse_double(cells[static_cast<std::size_t>(entry_col)], at + ": field 'entry'");
      }
      data.subjects.push_back(std::move(s));
      seen.emplace_back(p, false);
    }
    Subject& s = data.subjects[it->second];
    for (std::size_t k = 0; k < covs.size(); ++k) {
      const double v =
          parse_double(cells[static_cast<std::size_t>(cov_col[k])], at + ": field '" + covs[k] + "'");
      if (v != s.covariates[static_cast<Eigen::Index>(k)]) {
        throw InvalidInput(at + ": field '" + covs[k] + "' differs between rows of subject " + id);
      }
    }
    const auto& names = model.component_names();
    const auto cit = std::find(names.begin(), names.end(), cells[1]);
    if (cit == names.end()) throw InvalidInput(at + ": field 'component': unknown '" + cells[1] + "'");
    const auto jc = static_cast<std::size_t>(cit - names.begin());
    if (seen[it->second][jc]) {
      throw InvalidInput(at + ": component '" + cells[1] + "' repeated for subject " + id);
    }
    seen[it->second][jc] = true;
    const std::string& status = cells[2];
    const double t1 = parse_double(cells[3], at + ": field 't1'");
    if (t1 < 0.0 || t1 > horizon) throw InvalidInput(at + ": field 't1': outside [0, horizon]");
    const bool need_t2 = status == "interval";
    if (!need_t2 && !cells[4].empty()) throw InvalidInput(at + ": field 't2': only intervals have t2");
    if (status == "exact") {
      s.atom.components[jc] = Exact{t1, true};
    } else if (status == "exact_censored") {
      s.atom.components[jc] = Exact{t1, false};
    } else if (status == "interval") {
      const double t2 = parse_double(cells[4], at + ": field 't2'");
      if (!(t2 > t1) || t2 > horizon) throw InvalidInput(at + ": field 't2': need t1 < t2 <= horizon");
      s.atom.components[jc] = Interval{t1, t2};
    } else if (status == "survived_beyond") {
      s.atom.components[jc] = SurvivedBeyond{t1};
    } else {
      throw InvalidInput(at + ": field 'status': unknown '" + status + "'");
    }
  }
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      if (!seen[i][j]) {
        throw InvalidInput(source + ": subject " + data.subjects[i].id + " has no row for component '" +
                           model.component_names()[j] + "'");
      }
    }
  }
  return data;
}

Dataset load_dataset(const std::string& path, const IntensityModel& model, double horizon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(path + ": cannot open file");
  return read_dataset(in, model, horizon, path);
}

void write_truth(std::ostream& out, const IntensityModel& model,
                 const std::vector<std::string>& ids, const std::vector<SimulatedPath>& paths) {
  out << "subject_id,component,jump_time\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = 0; j < model.components(); ++j) {
      const double t = paths[i].jump_times[j];
      out << ids[i] << ',' << model.component_names()[j] << ','
          << (t == no_jump ? std::string() : format_double(t)) << '\n';
    }
  }
}

void write_fit_report(std::ostream& out, const FitResult& fit) {
  out << "loglik=" << format_double(fit.loglik) << '\n';
  out << "initial_loglik=" << format_double(fit.initial_loglik) << '\n';
  out << "converged=" << (fit.converged ? "true" : "false") << '\n';
  out << "iterations=" << fit.iterations << '\n';
  out << "evaluations=" << fit.evaluations << '\n';
  out << "gradient_norm=" << format_double(fit.gradient_norm) << '\n';
  out << "simplex_diameter=" << format_double(fit.simplex_diameter) << '\n';
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out << "estimate." << fit.names[i] << '=' << format_double(fit.theta_hat[k]) << '\n';
    if (fit.std_errors) {
      out << "se." << fit.names[i] << '=' << format_double((*fit.std_errors)[k]) << '\n';
    }
  }
  if (!fit.message.empty()) out << "message=" << fit.message << '\n';
  out << '\n';
  char row[160];
  std::snprintf(row, sizeof row, "%-14s %16s %16s\n", "parameter", "estimate", "std.error");
  out << row;
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (fit.std_errors) {
      std::snprintf(row, sizeof row, "%-14s %16.8g %16.8g\n", fit.names[i].c_str(), fit.theta_hat[k],
                    (*fit.std_errors)[k]);
    } else {
      std::snprintf(row, sizeof row, "%-14s %16.8g %16s\n", fit.names[i].c_str(), fit.theta_hat[k], "-");
    }
    out << row;
  }
}

}  // namespace gcmp::io
