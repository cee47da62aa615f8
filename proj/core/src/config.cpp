#include <pinto/config.hpp>
#include <pinto/oracles.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pinto {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

[[noreturn]] void fail(const std::string& what, int line) {
  std::ostringstream os;
  os << "config: " << what << " (line " << line << ")";
  throw std::invalid_argument(os.str());
}

double to_double(const std::string& key, const Entry& e) {
  char* end = nullptr;
  double v = std::strtod(e.value.c_str(), &end);
  if (e.value.empty() || end != e.value.c_str() + e.value.size())
    fail("key '" + key + "' needs a number, got '" + e.value + "'", e.line);
  return v;
}

std::int64_t to_int(const std::string& key, const Entry& e) {
  char* end = nullptr;
  long long v = std::strtoll(e.value.c_str(), &end, 10);
  if (e.value.empty() || end != e.value.c_str() + e.value.size())
    fail("key '" + key + "' needs an integer, got '" + e.value + "'", e.line);
  return v;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

std::vector<double> to_double_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  for (const auto& cell : split_list(e.value))
    out.push_back(to_double(key, {cell, e.line}));
  return out;
}

std::vector<std::int64_t> to_int_list(const std::string& key, const Entry& e) {
  std::vector<std::int64_t> out;
  for (const auto& cell : split_list(e.value))
    out.push_back(to_int(key, {cell, e.line}));
  return out;
}

std::vector<int> to_grid(const std::string& key, const Entry& e) {
  std::vector<int> out;
  for (auto v : to_int_list(key, e)) out.push_back(static_cast<int>(v));
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  return out;
}

int problem_value_dim(const std::string& problem) {
  return problem == "kovasznay" || problem == "beltrami" ? 3 : 1;
}

bool value_family(const std::string& problem) {
  return problem == "kovasznay" || problem == "beltrami" ||
         problem == "lid_cavity";
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, Entry> kv;
  {
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
      ++line;
      auto hash = raw.find('#');
      if (hash != std::string::npos) raw = raw.substr(0, hash);
      std::string s = trim(raw);
      if (s.empty()) continue;
      auto eq = s.find('=');
      if (eq == std::string::npos) fail("expected key = value, got '" + s + "'", line);
      std::string key = trim(s.substr(0, eq));
      if (key.empty()) fail("empty key", line);
      if (kv.count(key)) fail("duplicate key '" + key + "'", line);
      kv[key] = {trim(s.substr(eq + 1)), line};
    }
  }

  ExperimentConfig ec;
  TrainConfig& cfg = ec.train;
  std::vector<double> unseen_range;

  auto take = [&kv](const char* key) -> const Entry* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    return &it->second;
  };
  std::set<std::string> known;
  auto str_key = [&](const char* key, std::string* dst) {
    known.insert(key);
    if (const Entry* e = take(key)) *dst = e->value;
  };
  auto dbl_key = [&](const char* key, double* dst) {
    known.insert(key);
    if (const Entry* e = take(key)) *dst = to_double(key, *e);
  };
  auto int_key = [&](const char* key, auto* dst) {
    known.insert(key);
    if (const Entry* e = take(key))
      *dst = static_cast<std::remove_pointer_t<decltype(dst)>>(to_int(key, *e));
  };
  auto dlist_key = [&](const char* key, std::vector<double>* dst) {
    known.insert(key);
    if (const Entry* e = take(key)) *dst = to_double_list(key, *e);
  };
  auto choice_key = [&](const char* key, std::string dflt,
                        const std::vector<std::string>& allowed) {
    known.insert(key);
    const Entry* e = take(key);
    std::string v = e ? e->value : dflt;
    for (const auto& a : allowed)
      if (v == a) return v;
    fail("key '" + std::string(key) + "' must be one of [" +
             join(allowed, [](const std::string& s) { return s; }) + "], got '" +
             v + "'",
         e ? e->line : 0);
    return v;  // unreachable
  };

  str_key("problem", &cfg.problem);
  dbl_key("beta", &cfg.beta);
  dbl_key("nu", &cfg.nu);
  dbl_key("re", &cfg.re);
  cfg.model.kind = choice_key("model", "pinto", {"pinto", "deeponet"}) == "pinto"
                       ? ModelKind::Pinto
                       : ModelKind::Deeponet;
  ArchitectureConfig& a = cfg.model.arch;
  int_key("embed", &a.embed);
  int_key("heads", &a.heads);
  int_key("key_dim", &a.key_dim);
  int_key("encoder_layers", &a.encoder_layers);
  int_key("cau_count", &a.cau_count);
  int_key("cau_dense_layers", &a.cau_dense_layers);
  int_key("head_hidden_layers", &a.head_hidden_layers);
  a.activation = choice_key("activation", "tanh", {"tanh", "swish"}) == "tanh"
                     ? Act::Tanh
                     : Act::Swish;
  DeepOnetConfig& d = cfg.model.onet;
  known.insert("trunk_hidden");
  if (const Entry* e = take("trunk_hidden")) d.trunk_hidden = to_grid("trunk_hidden", *e);
  known.insert("branch_hidden");
  if (const Entry* e = take("branch_hidden")) d.branch_hidden = to_grid("branch_hidden", *e);
  int_key("latent_p", &d.p);

  int_key("family_seed", &cfg.family.seed);
  int_key("seen_count", &cfg.family.seen_count);
  int_key("unseen_count", &cfg.family.unseen_count);
  int_key("wave_n", &cfg.family.wave_n);
  int_key("wave_n_max", &cfg.family.wave_n_max);
  int_key("grf_grid", &cfg.family.grf_grid);
  dlist_key("seen_values", &cfg.family.seen_values);
  dlist_key("unseen_values", &cfg.family.unseen_values);
  dlist_key("unseen_range", &unseen_range);

  int_key("n_c", &cfg.n_c);
  int_key("n_ib", &cfg.n_ib);
  int_key("L", &cfg.L);
  int_key("sample_seed", &cfg.sample_seed);
  int_key("epochs", &cfg.epochs);
  int_key("batches", &cfg.batches);

  cfg.opt.kind = choice_key("optimizer", "adam", {"adam", "adamw"}) == "adam"
                     ? OptKind::Adam
                     : OptKind::AdamW;
  dbl_key("beta1", &cfg.opt.beta1);
  dbl_key("beta2", &cfg.opt.beta2);
  dbl_key("eps", &cfg.opt.eps);
  dbl_key("weight_decay", &cfg.opt.weight_decay);

  std::string sched =
      choice_key("schedule", "constant", {"constant", "exponential", "piecewise"});
  cfg.schedule.kind = sched == "constant"    ? Schedule::Kind::Constant
                      : sched == "exponential" ? Schedule::Kind::Exponential
                                               : Schedule::Kind::Piecewise;
  dbl_key("lr", &cfg.schedule.base);
  dbl_key("decay_rate", &cfg.schedule.rate);
  dbl_key("decay_steps", &cfg.schedule.steps);
  known.insert("lr_boundaries");
  if (const Entry* e = take("lr_boundaries"))
    cfg.schedule.boundaries = to_int_list("lr_boundaries", *e);
  dlist_key("lr_values", &cfg.schedule.values);

  dbl_key("lambda1", &cfg.weights.lambda1);
  dbl_key("lambda2", &cfg.weights.lambda2);
  int_key("init_seed", &cfg.init_seed);
  cfg.physics_guided =
      choice_key("mode", "physics-informed",
                 {"physics-informed", "physics-guided"}) == "physics-guided";
  known.insert("guided_grid");
  if (const Entry* e = take("guided_grid")) ec.guided_grid = to_grid("guided_grid", *e);
  str_key("out_dir", &cfg.out_dir);
  str_key("run_name", &ec.run_name);

  for (const auto& [key, e] : kv)
    if (!known.count(key)) fail("unknown key '" + key + "'", e.line);

  PdeProblem p;
  try {
    p = make_problem(cfg.problem, cfg.beta, cfg.nu, cfg.re);
  } catch (const std::exception& ex) {
    throw std::invalid_argument(std::string("config: ") + ex.what());
  }
  a.query_dim = p.coord_dim;
  a.boundary_dim = p.coord_dim;
  a.value_dim = problem_value_dim(cfg.problem);
  a.fields = p.field_count;
  d.trunk_in = p.coord_dim;
  d.branch_in = cfg.L * a.value_dim;
  d.fields = p.field_count;
  d.activation = a.activation;

  if (!unseen_range.empty()) {
    int line = kv.at("unseen_range").line;
    if (unseen_range.size() != 2 || !(unseen_range[0] < unseen_range[1]))
      fail("unseen_range needs 'lo,hi' with lo < hi", line);
    if (!value_family(cfg.problem))
      fail("unseen_range only applies to kovasznay/beltrami/lid_cavity", line);
    if (!cfg.family.unseen_values.empty())
      fail("give unseen_values or unseen_range, not both", line);
    if (cfg.family.unseen_count < 1)
      fail("unseen_range needs unseen_count >= 1", line);
    Rng rng = Rng(cfg.family.seed).fork(777);
    for (int i = 0; i < cfg.family.unseen_count; ++i)
      cfg.family.unseen_values.push_back(
          rng.uniform(unseen_range[0], unseen_range[1]));
  }
  return ec;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config_text(os.str());
}

std::string format_config(const ExperimentConfig& ec) {
  const TrainConfig& cfg = ec.train;
  const ArchitectureConfig& a = cfg.model.arch;
  const DeepOnetConfig& d = cfg.model.onet;
  std::ostringstream s;
  auto int_fmt = [](int v) { return std::to_string(v); };
  s << "problem = " << cfg.problem << "\n";
  s << "beta = " << num(cfg.beta) << "\n";
  s << "nu = " << num(cfg.nu) << "\n";
  s << "re = " << num(cfg.re) << "\n";
  s << "model = " << (cfg.model.kind == ModelKind::Pinto ? "pinto" : "deeponet")
    << "\n";
  s << "embed = " << a.embed << "\n";
  s << "heads = " << a.heads << "\n";
  s << "key_dim = " << a.key_dim << "\n";
  s << "encoder_layers = " << a.encoder_layers << "\n";
  s << "cau_count = " << a.cau_count << "\n";
  s << "cau_dense_layers = " << a.cau_dense_layers << "\n";
  s << "head_hidden_layers = " << a.head_hidden_layers << "\n";
  s << "activation = " << (a.activation == Act::Tanh ? "tanh" : "swish") << "\n";
  s << "trunk_hidden = " << join(d.trunk_hidden, int_fmt) << "\n";
  s << "branch_hidden = " << join(d.branch_hidden, int_fmt) << "\n";
  s << "latent_p = " << d.p << "\n";
  s << "family_seed = " << cfg.family.seed << "\n";
  s << "seen_count = " << cfg.family.seen_count << "\n";
  s << "unseen_count = " << cfg.family.unseen_count << "\n";
  s << "wave_n = " << cfg.family.wave_n << "\n";
  s << "wave_n_max = " << cfg.family.wave_n_max << "\n";
  s << "grf_grid = " << cfg.family.grf_grid << "\n";
  s << "seen_values = " << join(cfg.family.seen_values, num) << "\n";
  s << "unseen_values = " << join(cfg.family.unseen_values, num) << "\n";
  s << "n_c = " << cfg.n_c << "\n";
  s << "n_ib = " << cfg.n_ib << "\n";
  s << "L = " << cfg.L << "\n";
  s << "sample_seed = " << cfg.sample_seed << "\n";
  s << "epochs = " << cfg.epochs << "\n";
  s << "batches = " << cfg.batches << "\n";
  s << "optimizer = " << (cfg.opt.kind == OptKind::Adam ? "adam" : "adamw")
    << "\n";
  s << "beta1 = " << num(cfg.opt.beta1) << "\n";
  s << "beta2 = " << num(cfg.opt.beta2) << "\n";
  s << "eps = " << num(cfg.opt.eps) << "\n";
  s << "weight_decay = " << num(cfg.opt.weight_decay) << "\n";
  const char* sched = cfg.schedule.kind == Schedule::Kind::Constant ? "constant"
                      : cfg.schedule.kind == Schedule::Kind::Exponential
                          ? "exponential"
                          : "piecewise";
  s << "schedule = " << sched << "\n";
  s << "lr = " << num(cfg.schedule.base) << "\n";
  s << "decay_rate = " << num(cfg.schedule.rate) << "\n";
  s << "decay_steps = " << num(cfg.schedule.steps) << "\n";
  s << "lr_boundaries = "
    << join(cfg.schedule.boundaries,
            [](std::int64_t v) { return std::to_string(v); })
    << "\n";
  s << "lr_values = " << join(cfg.schedule.values, num) << "\n";
  s << "lambda1 = " << num(cfg.weights.lambda1) << "\n";
  s << "lambda2 = " << num(cfg.weights.lambda2) << "\n";
  s << "init_seed = " << cfg.init_seed << "\n";
  s << "mode = " << (cfg.physics_guided ? "physics-guided" : "physics-informed")
    << "\n";
  s << "guided_grid = " << join(ec.guided_grid, int_fmt) << "\n";
  s << "out_dir = " << cfg.out_dir << "\n";
  s << "run_name = " << ec.run_name << "\n";
  s << "# derived: query_dim=" << a.query_dim << " value_dim=" << a.value_dim
    << " fields=" << a.fields << " branch_in=" << d.branch_in << "\n";
  return s.str();
}

std::vector<int> default_guided_grid(const std::string& problem) {
  if (problem == "beltrami") return {65, 65, 21};
  if (problem == "kovasznay") return {129, 129};
  if (problem == "lid_cavity") return {129, 129};
  return {257, 129};  // scalar space-time problems
}

std::vector<Matrix> guided_reference_values(const TrainConfig& cfg,
                                            const std::vector<int>& grid) {
  PdeProblem p = train_problem(cfg);
  if (p.name == "lid_cavity")
    throw std::invalid_argument(
        "guided mode: the lid oracle has no pressure field");
  auto conds = prepare_conditions(cfg, true);
  std::vector<Matrix> out;
  out.reserve(conds.size());
  for (const auto& cd : conds) {
    ReferenceField ref = oracle_field(p, cd.cond, {grid, {}});
    const Matrix& pts = cd.colloc.interior;
    Matrix g(pts.rows(), p.field_count);
    for (long i = 0; i < pts.rows(); ++i) {
      std::vector<double> x(static_cast<std::size_t>(pts.cols()));
      for (long k = 0; k < pts.cols(); ++k)
        x[static_cast<std::size_t>(k)] = pts(i, k);
      for (int f = 0; f < p.field_count; ++f) g(i, f) = ref.sample(x, f);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace pinto
