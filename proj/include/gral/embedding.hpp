#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace gral::gateway {
class HttpTransport;
}

namespace gral::embed {

// Fixed-dimension vectors for the graph being worked on. node_vecs is keyed
// by node id, edge_vecs by position in the edge table, text_vecs by
// SHA-256 of the raw text. All vectors share dim.
struct EmbeddingTable {
  size_t dim = 0;
  std::map<int64_t, std::vector<double>> node_vecs;
  std::map<int64_t, std::vector<double>> edge_vecs;
  std::map<std::string, std::vector<double>> text_vecs;

  const std::vector<double>& node_vec(int64_t id) const;
  const std::vector<double>& edge_vec(int64_t index) const;
};

// Archive layout: one JSON header line (format, dim, node_ids, edge_indices,
// text_keys), '\n', then float32 little-endian rows in header order.
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const std::string& path, const EmbeddingTable& table);

// cos(u, v); returns 0 for a zero vector (degenerate embeddings must not
// abort retrieval — callers can log the *zero_flag).
double cosine(const std::vector<double>& u, const std::vector<double>& v,
              bool* zero_flag = nullptr);

enum class ProviderMode { fixture, service, record };

// Text -> vector source. Fixture mode reads <dir>/<sha256(text)>.json files
// of the form {"dim": d, "vector": [...]}. Service mode POSTs
// {"texts": [...]} to <base_url>/embed and expects {"dim": d, "vectors": [[...]]}.
// Record mode calls the service and writes the fixture file. Results are
// cached; the cache is safe for concurrent readers.
class TextEmbedder {
 public:
  TextEmbedder(ProviderMode mode, std::string fixture_dir,
               std::string base_url = "",
               std::shared_ptr<gateway::HttpTransport> transport = nullptr,
               std::string api_key_env = "GRAL_EMBED_API_KEY");

  std::vector<double> embed(const std::string& text);
  ProviderMode mode() const { return mode_; }

 private:
  std::vector<double> fetch(const std::string& text, const std::string& key);

  ProviderMode mode_;
  std::string fixture_dir_;
  std::string base_url_;
  std::shared_ptr<gateway::HttpTransport> transport_;
  std::string api_key_env_;
  std::mutex mu_;
  std::map<std::string, std::vector<double>> cache_;
};

}  // namespace gral::embed
