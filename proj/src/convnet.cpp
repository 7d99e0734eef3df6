#include "geomort/convnet.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include "geomort/augment.hpp"
#include "geomort/csv.hpp"

namespace geomort {

double poisson_nll(double lambda, double y) {
  if (!(lambda > 0.0)) throw DomainError("poisson_nll requires lambda > 0");
  if (y < 0.0) throw DomainError("poisson_nll requires y >= 0");
  return lambda - y * std::log(lambda);
}

double pearson_r(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("pearson_r: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw DomainError("pearson_r: need at least 2 points");
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DomainError("pearson_r: zero variance");
  return sab / std::sqrt(saa * sbb);
}

double predict_tile(const ConvRegressor<float>& m, const ImageTile& tile) {
  if (tile.height != m.shape.input_size || tile.width != m.shape.input_size) {
    const ImageTile resized = resize_bilinear(tile, m.shape.input_size, m.shape.input_size);
    return static_cast<double>(forward(m, resized).lambda);
  }
  return static_cast<double>(forward(m, tile).lambda);
}

double mean_rate(const std::vector<double>& per_image_lambda) {
  if (per_image_lambda.empty()) throw DomainError("predict_county: no tiles");
  double s = 0.0;
  for (double v : per_image_lambda) s += v;
  return s / static_cast<double>(per_image_lambda.size());
}

double predict_county(const ConvRegressor<float>& m, const std::vector<ImageTile>& tiles) {
  if (tiles.empty()) throw DomainError("predict_county: no tiles");
  std::vector<double> lam(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) lam[i] = predict_tile(m, tiles[i]);
  return mean_rate(lam);
}

namespace {

double eval_mean_nll(const ConvRegressor<float>& m, const TileLoader& load_tile,
                     const std::vector<double>& targets,
                     const std::vector<std::size_t>& idx) {
  double sum = 0.0;
  for (std::size_t i : idx) {
    ImageTile tile = load_tile(i);
    if (tile.height != m.shape.input_size || tile.width != m.shape.input_size)
      tile = resize_bilinear(tile, m.shape.input_size, m.shape.input_size);
    sum += poisson_nll(static_cast<double>(forward(m, tile).lambda), targets[i]);
  }
  return sum / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(const ConvRegressorShape& shape, const TileLoader& load_tile,
                  const std::vector<double>& target_rates,
                  const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx, const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0)) throw DomainError("learning_rate must be >= 0");
  if (cfg.epochs < 1) throw DomainError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (train_idx.empty()) throw DomainError("empty training set");
  if (val_idx.empty()) throw DomainError("empty validation set");
  for (std::size_t i : train_idx)
    if (i >= target_rates.size()) throw DomainError("train index out of range");
  for (std::size_t i : val_idx)
    if (i >= target_rates.size()) throw DomainError("validation index out of range");

  ConvRegressor<float> model = ConvRegressor<float>::random_init(shape, cfg.seed);
  // Start the log-rate head at the mean training rate.
  {
    double mean_y = 0.0;
    for (std::size_t i : train_idx) mean_y += target_rates[i];
    mean_y /= static_cast<double>(train_idx.size());
    model.fc2.b[0] = static_cast<float>(std::log(std::max(mean_y, 1e-6)));
  }

  SgdMomentum<float> opt(shape, cfg.learning_rate, cfg.momentum);
  Gradients<float> grads(shape);
  ForwardCache<float> cache;
  CounterRng shuffle_rng(mix64(cfg.seed ^ 0x7261696EULL));

  TrainResult result;
  result.model = model;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_idx);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    CounterRng aug_rng = CounterRng(cfg.seed).derive(0xA06 + static_cast<std::uint64_t>(epoch));

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    bool finite = true;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      grads.zero();
      double batch_loss = 0.0;
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t i = order[bi];
        ImageTile tile = load_tile(i);
        if (cfg.augment) {
          tile = augment(tile, aug_rng, shape.input_size);
        } else if (tile.height != shape.input_size || tile.width != shape.input_size) {
          tile = resize_bilinear(tile, shape.input_size, shape.input_size);
        }
        forward(model, tile, &cache);
        const double lambda = static_cast<double>(cache.lambda);
        const double y = target_rates[i];
        batch_loss += poisson_nll(lambda, y);
        backward(model, cache, static_cast<float>((lambda - y) * inv_batch), grads);
      }
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss)) {
        finite = false;
        break;
      }
      opt.step(model, grads);
      epoch_loss += batch_loss * static_cast<double>(end - start);
      seen += end - start;
    }
    if (!finite) {
      result.diverged = true;
      break;
    }

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(seen);
    entry.val_loss = eval_mean_nll(model, load_tile, target_rates, val_idx);
    result.log.push_back(entry);
    if (!std::isfinite(entry.val_loss)) {
      result.diverged = true;
      break;
    }
    if (entry.val_loss < best_val) {
      best_val = entry.val_loss;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  if (result.best_epoch == 0 && !result.log.empty()) {
    // No epoch improved on +inf only if every val loss was non-finite.
    result.best_epoch = 1;
  }
  return result;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error("truncated checkpoint");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void put_f32_array(std::ostream& out, const std::vector<float>& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (float f : v) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

void get_f32_array(std::istream& in, std::vector<float>& v) {
  const std::uint32_t n = get_u32(in);
  if (n != v.size()) throw Error("checkpoint parameter count mismatch");
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t bits = get_u32(in);
    std::memcpy(&v[i], &bits, 4);
  }
}

constexpr char kCheckpointMagic[8] = {'G', 'M', 'O', 'R', 'T', 'C', 'K', '1'};

}  // namespace

void save_checkpoint(std::ostream& out, const ConvRegressor<float>& m) {
  out.write(kCheckpointMagic, 8);
  put_u32(out, 1);  // version
  put_u32(out, static_cast<std::uint32_t>(m.shape.input_size));
  put_u32(out, static_cast<std::uint32_t>(m.shape.c1));
  put_u32(out, static_cast<std::uint32_t>(m.shape.c2));
  put_u32(out, static_cast<std::uint32_t>(m.shape.c3));
  put_u32(out, static_cast<std::uint32_t>(m.shape.d_embed));
  for (const auto* arr : m.param_arrays()) put_f32_array(out, *arr);
}

ConvRegressor<float> load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw Error("not a model checkpoint");
  if (get_u32(in) != 1) throw Error("unsupported checkpoint version");
  ConvRegressorShape s;
  s.input_size = static_cast<int>(get_u32(in));
  s.c1 = static_cast<int>(get_u32(in));
  s.c2 = static_cast<int>(get_u32(in));
  s.c3 = static_cast<int>(get_u32(in));
  s.d_embed = static_cast<int>(get_u32(in));
  ConvRegressor<float> m = ConvRegressor<float>::zero(s);
  for (auto* arr : m.param_arrays()) get_f32_array(in, *arr);
  return m;
}

void save_checkpoint_file(const std::string& path, const ConvRegressor<float>& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for write: " + path);
  save_checkpoint(out, m);
}

ConvRegressor<float> load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

void write_train_log(std::ostream& out, const std::vector<TrainLogEntry>& log) {
  out << "epoch,train_loss,val_loss\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.8f,%.8f", e.epoch, e.train_loss, e.val_loss);
    out << buf << '\n';
  }
}

EmbeddingMatrix import_embeddings(std::istream& in, const std::set<TileKey>* known_keys) {
  std::vector<std::string> header;
  const auto rows = read_csv(in, &header);
  if (header.size() < 5 || header[0] != "fips" || header[1] != "school" ||
      header[2] != "row" || header[3] != "col")
    throw IngestError(1, "embedding CSV header must start with fips,school,row,col,e0..");
  const int d = static_cast<int>(header.size()) - 4;
  for (int j = 0; j < d; ++j) {
    if (header[4 + j] != "e" + std::to_string(j))
      throw IngestError(1, "embedding column " + std::to_string(4 + j) +
                               " must be named e" + std::to_string(j));
  }
  if (rows.empty()) throw IngestError("embedding file has no data rows");

  EmbeddingMatrix em;
  em.E.resize(static_cast<int>(rows.size()), d);
  std::set<TileKey> seen;
  long row_no = 1;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ++row_no;
    const auto& f = rows[r];
    if (f.size() != header.size())
      throw IngestError(row_no, "expected " + std::to_string(header.size()) + " fields");
    TileKey key;
    try {
      key.fips = f[0];
      key.school = std::stoi(f[1]);
      key.row = std::stoi(f[2]);
      key.col = std::stoi(f[3]);
      for (int j = 0; j < d; ++j) em.E(static_cast<int>(r), j) = std::stod(f[4 + j]);
    } catch (const std::exception&) {
      throw IngestError(row_no, "unparseable embedding row");
    }
    if (!seen.insert(key).second)
      throw IngestError(row_no, "duplicate tile key " + key.str());
    if (known_keys && !known_keys->count(key))
      throw IngestError(row_no, "unknown tile key " + key.str());
    em.keys.push_back(std::move(key));
  }
  return em;
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& em) {
  out << "fips,school,row,col";
  for (int j = 0; j < em.E.cols(); ++j) out << ",e" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < em.keys.size(); ++i) {
    const TileKey& k = em.keys[i];
    out << csv_quote(k.fips) << ',' << k.school << ',' << k.row << ',' << k.col;
    for (int j = 0; j < em.E.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.7g", em.E(static_cast<int>(i), j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace geomort
