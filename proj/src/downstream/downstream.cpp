#include "tearing/downstream/downstream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace tearing {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename V>
V parse_cell(const std::string& s, const std::string& where) {
  V v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw TableError(where + ": cannot parse '" + s + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Binary hinge problem on rows already mapped to features (bias included).
std::vector<double> train_binary(const std::vector<std::vector<double>>& f, const std::vector<int>& sign,
                                 const SvmOptions& o) {
  const std::size_t dim = f.front().size();
  const double n = static_cast<double>(f.size());
  const double lambda = 1.0 / o.c;
  std::vector<double> w(dim, 0.0), avg(dim, 0.0), grad(dim);
  const std::size_t average_from = o.iterations / 2;
  std::size_t averaged = 0;
  for (std::size_t t = 1; t <= o.iterations; ++t) {
    for (std::size_t j = 0; j < dim; ++j) grad[j] = lambda * w[j];
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (sign[i] * dot(w, f[i]) < 1.0) {
        for (std::size_t j = 0; j < dim; ++j) grad[j] -= sign[i] * f[i][j] / n;
      }
    }
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    for (std::size_t j = 0; j < dim; ++j) w[j] -= eta * grad[j];
    if (t > average_from) {
      for (std::size_t j = 0; j < dim; ++j) avg[j] += w[j];
      ++averaged;
    }
  }
  for (double& v : avg) v /= static_cast<double>(std::max<std::size_t>(1, averaged));
  return avg;
}

std::vector<std::vector<double>> select(const std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& idx) {
  std::vector<std::vector<double>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(rows[i]);
  return out;
}

template <typename L>
std::vector<L> select(const std::vector<L>& v, const std::vector<std::size_t>& idx) {
  std::vector<L> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

int majority(const std::vector<int>& labels) {
  std::map<int, std::size_t> hist;
  for (int l : labels) ++hist[l];
  int best = hist.begin()->first;
  for (const auto& [l, n] : hist) {
    if (n > hist[best]) best = l;
  }
  return best;
}

struct Rotation {
  std::vector<std::size_t> train, test;
};

std::vector<Rotation> rotations(const std::vector<int>& folds, std::size_t count) {
  std::vector<Rotation> out(count);
  for (std::size_t i = 0; i < folds.size(); ++i) {
    for (std::size_t f = 0; f < count; ++f) (static_cast<std::size_t>(folds[i]) == f ? out[f].train : out[f].test).push_back(i);
  }
  return out;
}

// Labels present overall but missing from a training fold.
void warn_missing(const std::vector<int>& all, const std::vector<int>& train_labels, std::size_t fold,
                  std::vector<std::string>& warnings) {
  const std::set<int> have(train_labels.begin(), train_labels.end());
  for (int l : std::set<int>(all.begin(), all.end())) {
    if (!have.count(l)) {
      warnings.push_back("fold " + std::to_string(fold) + ": class " + std::to_string(l) +
                         " absent from training rows; classifier omits it");
    }
  }
}

}  // namespace

void CodewordTable::validate() const {
  const std::size_t n = ids.size();
  if (k.size() != n || has.size() != n || codes.size() != n) throw TableError("codeword table columns differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    if (codes[i].size() != dim()) {
      throw TableError("row " + ids[i] + " has " + std::to_string(codes[i].size()) + " code values, expected " +
                       std::to_string(dim()));
    }
  }
}

void CodewordTable::push_back(std::string id, int count, std::array<bool, 5> presence, std::vector<double> code) {
  ids.push_back(std::move(id));
  k.push_back(count);
  has.push_back(presence);
  codes.push_back(std::move(code));
}

CodewordTable extract_codes(const LoadedModel& model, const std::filesystem::path& manifest, const std::string& split,
                            std::size_t workers) {
  const auto samples = load_split(manifest, split);
  CodewordTable t;
  t.ids.resize(samples.size());
  t.k.resize(samples.size());
  t.has.resize(samples.size());
  t.codes.resize(samples.size());
  std::vector<std::thread> threads;
  workers = std::max<std::size_t>(1, std::min(workers, samples.size()));
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < samples.size(); i += workers) {
        Tape<float> tape;
        BoundParameters<float> p(tape, model.params);
        const Var code = encode(tape, p, tape.constant(cloud_tensor<float>(samples[i].points)), model.config.arch);
        const auto& v = tape.value(code);
        t.ids[i] = samples[i].id;
        t.k[i] = samples[i].k;
        t.has[i] = samples[i].has;
        t.codes[i].assign(v.values().begin(), v.values().end());
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& th : threads) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return t;
}

void write_codes_csv(const std::filesystem::path& path, const CodewordTable& table) {
  table.validate();
  auto os = open_out(path);
  os << "scene_id,k";
  for (ShapeKind s : kShapeKinds) os << ",has_" << shape_name(s);
  for (std::size_t j = 0; j < table.dim(); ++j) os << ",c_" << j;
  os << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    os << table.ids[i] << ',' << table.k[i];
    for (bool b : table.has[i]) os << ',' << (b ? 1 : 0);
    for (double v : table.codes[i]) os << ',' << num(v);
    os << '\n';
  }
}

CodewordTable read_codes_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TableError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw TableError(path.string() + ": empty file");
  const auto header = split_csv(line);
  if (header.size() < 7 || header[0] != "scene_id" || header[1] != "k") {
    throw TableError(path.string() + ":1: expected header scene_id,k,has_*,c_*");
  }
  for (std::size_t s = 0; s < 5; ++s) {
    if (header[2 + s] != "has_" + shape_name(kShapeKinds[s])) {
      throw TableError(path.string() + ":1: column " + std::to_string(3 + s) + " should be has_" +
                       shape_name(kShapeKinds[s]));
    }
  }
  const std::size_t dim = header.size() - 7;
  CodewordTable t;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw TableError(where + ": " + std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()));
    }
    std::array<bool, 5> has{};
    for (std::size_t s = 0; s < 5; ++s) has[s] = parse_cell<int>(cells[2 + s], where) != 0;
    std::vector<double> code(dim);
    for (std::size_t j = 0; j < dim; ++j) code[j] = parse_cell<double>(cells[7 + j], where);
    t.push_back(cells[0], parse_cell<int>(cells[1], where), has, std::move(code));
  }
  return t;
}

LinearClassifier LinearClassifier::train(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                         const SvmOptions& options) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("classifier needs matching, non-empty rows and labels");
  if (!(options.c > 0.0) || options.iterations == 0) throw std::invalid_argument("classifier needs c > 0 and iterations > 0");
  LinearClassifier m;
  const std::size_t dim = x.front().size();
  if (options.standardize) {
    m.mean_.assign(dim, 0.0);
    m.scale_.assign(dim, 0.0);
    for (const auto& r : x) {
      for (std::size_t j = 0; j < dim; ++j) m.mean_[j] += r[j];
    }
    for (double& v : m.mean_) v /= static_cast<double>(x.size());
    for (const auto& r : x) {
      for (std::size_t j = 0; j < dim; ++j) m.scale_[j] += (r[j] - m.mean_[j]) * (r[j] - m.mean_[j]);
    }
    for (double& v : m.scale_) {
      v = std::sqrt(v / static_cast<double>(x.size()));
      if (v == 0.0) v = 1.0;
    }
  }
  double norm_sum = 0.0;
  for (const auto& r : x) {
    std::vector<double> f = m.features(r);
    f.pop_back();
    norm_sum += std::sqrt(dot(f, f));
  }
  m.bias_feature_ = norm_sum > 0.0 ? norm_sum / static_cast<double>(x.size()) : 1.0;

  std::vector<std::vector<double>> f;
  f.reserve(x.size());
  for (const auto& r : x) f.push_back(m.features(r));
  const std::set<int> classes(y.begin(), y.end());
  m.classes_.assign(classes.begin(), classes.end());
  for (int c : m.classes_) {
    std::vector<int> sign(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) sign[i] = y[i] == c ? 1 : -1;
    m.weights_.push_back(train_binary(f, sign, options));
  }
  return m;
}

std::vector<double> LinearClassifier::features(const std::vector<double>& x) const {
  std::vector<double> f(x.begin(), x.end());
  if (!mean_.empty()) {
    if (x.size() != mean_.size()) throw std::invalid_argument("feature width differs from training");
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = (f[j] - mean_[j]) / scale_[j];
  }
  f.push_back(bias_feature_);
  return f;
}

std::vector<double> LinearClassifier::scores(const std::vector<double>& x) const {
  const auto f = features(x);
  std::vector<double> s;
  for (const auto& w : weights_) {
    if (w.size() != f.size()) throw std::invalid_argument("feature width differs from training");
    s.push_back(dot(w, f));
  }
  return s;
}

int LinearClassifier::predict(const std::vector<double>& x) const {
  const auto s = scores(x);
  // A single class trains against no negatives; predict it.
  const auto it = std::max_element(s.begin(), s.end());
  return classes_[static_cast<std::size_t>(it - s.begin())];
}

std::vector<int> stratified_folds(const std::vector<std::string>& ids, const std::vector<int>& labels,
                                  std::size_t folds, std::uint64_t seed) {
  if (ids.size() != labels.size()) throw std::invalid_argument("ids and labels differ in length");
  if (folds == 0) throw std::invalid_argument("fold count must be positive");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) groups[labels[i]].push_back(i);
  std::vector<int> out(ids.size(), 0);
  std::size_t dealt = 0;
  for (auto& [label, rows] : groups) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      const auto ka = mix_seed(seed, tag_hash(ids[a]));
      const auto kb = mix_seed(seed, tag_hash(ids[b]));
      return ka != kb ? ka < kb : ids[a] < ids[b];
    });
    for (std::size_t r : rows) out[r] = static_cast<int>(dealt++ % folds);
  }
  return out;
}

double chance_mae(const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("no labels");
  std::map<int, double> p;
  for (int l : labels) p[l] += 1.0 / static_cast<double>(labels.size());
  double e = 0.0;
  for (const auto& [a, pa] : p) {
    for (const auto& [b, pb] : p) e += pa * pb * std::abs(a - b);
  }
  return e;
}

namespace {

struct CvOutcome {
  std::vector<double> fold_error;
  std::vector<double> fold_majority;
};

// Mean absolute error (or error rate when `zero_one`) per rotation.
CvOutcome cross_validate(const std::vector<std::vector<double>>& x, const std::vector<int>& labels,
                         const std::vector<int>& folds, std::size_t count, const SvmOptions& options, bool zero_one,
                         std::vector<std::string>* warnings) {
  CvOutcome out;
  const auto rots = rotations(folds, count);
  for (std::size_t f = 0; f < count; ++f) {
    const auto& r = rots[f];
    if (r.train.empty() || r.test.empty()) throw TableError("fold " + std::to_string(f) + " is empty; need more rows");
    const auto train_y = select(labels, r.train);
    if (warnings) warn_missing(labels, train_y, f, *warnings);
    const auto clf = LinearClassifier::train(select(x, r.train), train_y, options);
    const int constant = majority(train_y);
    double err = 0.0, err_major = 0.0;
    for (std::size_t i : r.test) {
      const int pred = clf.predict(x[i]);
      err += zero_one ? (pred != labels[i]) : std::abs(pred - labels[i]);
      err_major += zero_one ? (constant != labels[i]) : std::abs(constant - labels[i]);
    }
    out.fold_error.push_back(err / static_cast<double>(r.test.size()));
    out.fold_majority.push_back(err_major / static_cast<double>(r.test.size()));
  }
  return out;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

CountResult count_cv(const CodewordTable& table, std::uint64_t seed, std::size_t folds, const SvmOptions& options) {
  table.validate();
  if (table.size() < folds) throw TableError("count_cv needs at least " + std::to_string(folds) + " rows");
  CountResult res;
  const auto assignment = stratified_folds(table.ids, table.k, folds, seed);
  const auto cv = cross_validate(table.codes, table.k, assignment, folds, options, false, &res.warnings);
  res.fold_mae = cv.fold_error;
  res.mae = mean(cv.fold_error);
  res.mae_majority = mean(cv.fold_majority);

  // Shuffle labels in scene-id order so the result does not depend on row order.
  std::vector<std::size_t> by_id(table.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return table.ids[a] < table.ids[b]; });
  std::vector<int> sorted_labels = select(table.k, by_id);
  Rng rng = Rng::derive(seed, "count.shuffle");
  rng.shuffle(sorted_labels);
  std::vector<int> shuffled(table.size());
  for (std::size_t i = 0; i < by_id.size(); ++i) shuffled[by_id[i]] = sorted_labels[i];
  const auto shuffled_folds = stratified_folds(table.ids, shuffled, folds, seed);
  res.mae_shuffled = mean(cross_validate(table.codes, shuffled, shuffled_folds, folds, options, false, nullptr).fold_error);
  res.mae_chance = chance_mae(table.k);
  return res;
}

PresenceResult presence_cv(const CodewordTable& table, std::size_t shape, std::uint64_t seed, std::size_t folds,
                           const SvmOptions& options) {
  table.validate();
  if (shape >= 5) throw std::invalid_argument("shape index out of range");
  if (table.size() < folds) throw TableError("presence_cv needs at least " + std::to_string(folds) + " rows");
  std::vector<int> y;
  for (const auto& h : table.has) y.push_back(h[shape] ? 1 : 0);
  PresenceResult res;
  const auto assignment = stratified_folds(table.ids, y, folds, seed);
  const auto cv = cross_validate(table.codes, y, assignment, folds, options, true, &res.warnings);
  res.accuracy = 1.0 - mean(cv.fold_error);
  res.majority_accuracy = 1.0 - mean(cv.fold_majority);
  return res;
}

DkResult dk_analysis(const CodewordTable& table) {
  table.validate();
  if (table.size() == 0) throw TableError("dk analysis of an empty table");
  DkResult res;
  const int k_max = *std::max_element(table.k.begin(), table.k.end());
  const int k_min = *std::min_element(table.k.begin(), table.k.end());
  std::vector<double> centre(table.dim(), 0.0);
  std::size_t n_max = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.k[i] != k_max) continue;
    for (std::size_t j = 0; j < table.dim(); ++j) centre[j] += table.codes[i][j];
    ++n_max;
  }
  for (double& v : centre) v /= static_cast<double>(n_max);
  for (int k = std::min(1, k_min); k <= k_max; ++k) {
    std::vector<double> d;
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table.k[i] != k) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < table.dim(); ++j) s += (table.codes[i][j] - centre[j]) * (table.codes[i][j] - centre[j]);
      d.push_back(std::sqrt(s));
    }
    if (d.empty()) {
      if (k >= 1) res.warnings.push_back("no codewords with count " + std::to_string(k) + "; row omitted");
      continue;
    }
    DkRow row;
    row.k = k;
    row.count = d.size();
    row.d_raw = mean(d);
    if (d.size() > 1) {
      double var = 0.0;
      for (double v : d) var += (v - row.d_raw) * (v - row.d_raw);
      row.stderr_raw = std::sqrt(var / static_cast<double>(d.size() - 1) / static_cast<double>(d.size()));
    }
    res.rows.push_back(row);
  }
  double lo = res.rows.front().d_raw, hi = lo;
  for (const auto& r : res.rows) {
    lo = std::min(lo, r.d_raw);
    hi = std::max(hi, r.d_raw);
  }
  for (auto& r : res.rows) {
    r.d = hi > lo ? (r.d_raw - lo) / (hi - lo) : 0.0;
    r.stderr = hi > lo ? r.stderr_raw / (hi - lo) : 0.0;
  }
  return res;
}

void write_dk_csv(const std::filesystem::path& path, const DkResult& result) {
  auto os = open_out(path);
  os << "k,count,d_raw,stderr_raw,d,stderr\n";
  for (const auto& r : result.rows) {
    os << r.k << ',' << r.count << ',' << num(r.d_raw) << ',' << num(r.stderr_raw) << ',' << num(r.d) << ','
       << num(r.stderr) << '\n';
  }
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  auto os = open_out(path);
  os << "task,variant,metric,value,seed\n";
  for (const auto& r : rows) os << r.task << ',' << r.variant << ',' << r.metric << ',' << num(r.value) << ',' << r.seed << '\n';
}

}  // namespace tearing
