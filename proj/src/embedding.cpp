#include "gral/embedding.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "gral/error.hpp"
#include "gral/gateway.hpp"
#include "gral/util.hpp"

namespace gral::embed {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_vector(const std::vector<double>& v, size_t dim,
                  const std::string& what) {
  if (v.size() != dim)
    throw Error(Errc::dimension_mismatch,
                what + " has dim " + std::to_string(v.size()) + ", table dim " +
                    std::to_string(dim));
  if (!util::all_finite(v))
    throw Error(Errc::non_finite_value, what + " contains NaN/Inf");
}

void append_f32(std::string& out, const std::vector<double>& v) {
  for (double x : v) {
    float f = float(x);
    char buf[4];
    std::memcpy(buf, &f, 4);
    out.append(buf, 4);
  }
}

std::vector<double> read_f32(const std::string& blob, size_t& off, size_t dim,
                             const std::string& path) {
  if (off + dim * 4 > blob.size())
    throw Error(Errc::io_error, "embedding payload truncated: " + path);
  std::vector<double> v(dim);
  for (size_t i = 0; i < dim; ++i) {
    float f;
    std::memcpy(&f, blob.data() + off, 4);
    off += 4;
    v[i] = double(f);
  }
  return v;
}

}  // namespace

const std::vector<double>& EmbeddingTable::node_vec(int64_t id) const {
  auto it = node_vecs.find(id);
  if (it == node_vecs.end())
    throw Error(Errc::missing_vector, "node " + std::to_string(id));
  return it->second;
}

const std::vector<double>& EmbeddingTable::edge_vec(int64_t index) const {
  auto it = edge_vecs.find(index);
  if (it == edge_vecs.end())
    throw Error(Errc::missing_vector, "edge " + std::to_string(index));
  return it->second;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::string blob = util::read_file(path);
  size_t nl = blob.find('\n');
  if (nl == std::string::npos)
    throw Error(Errc::io_error, "embedding archive missing header: " + path);
  json header;
  try {
    header = json::parse(blob.substr(0, nl));
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, std::string("embedding header: ") + e.what());
  }
  if (header.value("format", "") != "gral-embeddings-v1")
    throw Error(Errc::io_error, "unrecognized embedding format in " + path);

  EmbeddingTable table;
  table.dim = header.at("dim").get<size_t>();
  size_t off = nl + 1;
  for (int64_t id : header.value("node_ids", std::vector<int64_t>{})) {
    auto v = read_f32(blob, off, table.dim, path);
    check_vector(v, table.dim, "node " + std::to_string(id));
    if (!table.node_vecs.emplace(id, std::move(v)).second)
      throw Error(Errc::io_error, "duplicate node vector " + std::to_string(id));
  }
  for (int64_t idx : header.value("edge_indices", std::vector<int64_t>{})) {
    auto v = read_f32(blob, off, table.dim, path);
    check_vector(v, table.dim, "edge " + std::to_string(idx));
    if (!table.edge_vecs.emplace(idx, std::move(v)).second)
      throw Error(Errc::io_error, "duplicate edge vector " + std::to_string(idx));
  }
  for (const std::string& key : header.value("text_keys", std::vector<std::string>{})) {
    auto v = read_f32(blob, off, table.dim, path);
    check_vector(v, table.dim, "text " + key);
    if (!table.text_vecs.emplace(key, std::move(v)).second)
      throw Error(Errc::io_error, "duplicate text vector " + key);
  }
  if (off != blob.size())
    throw Error(Errc::io_error, "embedding archive has trailing bytes: " + path);
  return table;
}

void save_embeddings(const std::string& path, const EmbeddingTable& table) {
  json header;
  header["format"] = "gral-embeddings-v1";
  header["dim"] = table.dim;
  std::string payload;
  {
    std::vector<int64_t> ids;
    for (const auto& [id, v] : table.node_vecs) {
      check_vector(v, table.dim, "node " + std::to_string(id));
      ids.push_back(id);
      append_f32(payload, v);
    }
    header["node_ids"] = ids;
  }
  {
    std::vector<int64_t> ids;
    for (const auto& [id, v] : table.edge_vecs) {
      check_vector(v, table.dim, "edge " + std::to_string(id));
      ids.push_back(id);
      append_f32(payload, v);
    }
    header["edge_indices"] = ids;
  }
  {
    std::vector<std::string> keys;
    for (const auto& [key, v] : table.text_vecs) {
      check_vector(v, table.dim, "text " + key);
      keys.push_back(key);
      append_f32(payload, v);
    }
    header["text_keys"] = keys;
  }
  util::write_file(path, header.dump() + "\n" + payload);
}

double cosine(const std::vector<double>& u, const std::vector<double>& v,
              bool* zero_flag) {
  if (u.size() != v.size())
    throw Error(Errc::dimension_mismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  if (zero_flag) *zero_flag = false;
  if (uu <= 0.0 || vv <= 0.0) {
    if (zero_flag) *zero_flag = true;
    return 0.0;
  }
  double c = uv / (std::sqrt(uu) * std::sqrt(vv));
  if (!std::isfinite(c))
    throw Error(Errc::non_finite_value, "cosine on non-finite input");
  return c;
}

TextEmbedder::TextEmbedder(ProviderMode mode, std::string fixture_dir,
                           std::string base_url,
                           std::shared_ptr<gateway::HttpTransport> transport,
                           std::string api_key_env)
    : mode_(mode),
      fixture_dir_(std::move(fixture_dir)),
      base_url_(std::move(base_url)),
      transport_(std::move(transport)),
      api_key_env_(std::move(api_key_env)) {
  if (mode_ != ProviderMode::fixture && !transport_)
    transport_ = gateway::make_httplib_transport();
}

std::vector<double> TextEmbedder::embed(const std::string& text) {
  std::string key = util::sha256_hex(text);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  std::vector<double> v = fetch(text, key);
  if (!util::all_finite(v))
    throw Error(Errc::non_finite_value, "embedding of '" + text + "'");
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(key, std::move(v)).first->second;
}

std::vector<double> TextEmbedder::fetch(const std::string& text,
                                        const std::string& key) {
  fs::path fixture = fs::path(fixture_dir_) / (key + ".json");
  if (mode_ == ProviderMode::fixture) {
    if (!fs::exists(fixture))
      throw Error(Errc::fixture_miss,
                  "no embedding fixture " + fixture.string() + " for this text");
    json doc = json::parse(util::read_file(fixture));
    auto v = doc.at("vector").get<std::vector<double>>();
    if (v.size() != doc.at("dim").get<size_t>())
      throw Error(Errc::dimension_mismatch, "fixture " + fixture.string());
    return v;
  }

  if (base_url_.empty())
    throw Error(Errc::provider_unavailable, "no embedding base_url configured");
  gateway::Headers headers{{"Content-Type", "application/json"}};
  if (const char* api_key = std::getenv(api_key_env_.c_str()))
    headers.emplace_back("Authorization", std::string("Bearer ") + api_key);
  json body;
  body["texts"] = json::array({text});
  auto resp = transport_->post_json(base_url_ + "/embed", headers, body.dump());
  if (!resp.ok())
    throw Error(Errc::provider_unavailable,
                "embedding service status " + std::to_string(resp.status));
  std::vector<double> v;
  try {
    json reply = json::parse(resp.body);
    v = reply.at("vectors").at(0).get<std::vector<double>>();
    if (v.size() != reply.at("dim").get<size_t>())
      throw Error(Errc::dimension_mismatch, "embedding service reply");
  } catch (const json::exception& e) {
    throw Error(Errc::provider_unavailable,
                std::string("malformed embedding reply: ") + e.what());
  }
  if (mode_ == ProviderMode::record) {
    json doc;
    doc["dim"] = v.size();
    doc["vector"] = v;
    util::write_file(fixture, doc.dump());
  }
  return v;
}

}  // namespace gral::embed
