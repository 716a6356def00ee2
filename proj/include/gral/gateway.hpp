#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gral/graph.hpp"

namespace gral::gateway {

struct HttpResponse {
  int status = 0;
  std::string body;
  // status 0 means the request never reached the server
  bool ok() const { return status >= 200 && status < 300; }
};

using Headers = std::vector<std::pair<std::string, std::string>>;

// Seam for tests (counting stubs, canned responses) and for the real client.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& url, const Headers& headers,
                                 const std::string& body) = 0;
};

std::shared_ptr<HttpTransport> make_httplib_transport();

enum class GatewayMode { fixture, service, record };

struct CompletionParams {
  std::string model = "graph-aligned-generator";
  double temperature = 0.0;
  int max_tokens = 1024;
};

// Chat-completion access with three modes: fixture (offline, completions read
// from <dir>/<sha256(prompt)>.txt), service (OpenAI-style POST to
// {base_url}/v1/chat/completions, key from an env var), record (service +
// write-through to the fixture directory, i.e. cassette recording).
class LlmGateway {
 public:
  LlmGateway(GatewayMode mode, std::string fixture_dir,
             std::string base_url = "",
             std::shared_ptr<HttpTransport> transport = nullptr,
             std::string api_key_env = "GRAL_API_KEY");

  std::string complete(const std::string& prompt,
                       const CompletionParams& params = {});

  GatewayMode mode() const { return mode_; }
  size_t network_calls() const { return network_calls_; }
  // Shrink retry waits in tests.
  void set_backoff_base_ms(int ms) { backoff_base_ms_ = ms; }

 private:
  std::string call_service(const std::string& prompt,
                           const CompletionParams& params);

  GatewayMode mode_;
  std::string fixture_dir_;
  std::string base_url_;
  std::shared_ptr<HttpTransport> transport_;
  std::string api_key_env_;
  size_t network_calls_ = 0;
  int backoff_base_ms_ = 250;
};

struct Anchor {
  enum class Kind { entity, relation };
  Kind kind = Kind::entity;
  std::string span;
  // Node ids (entity) or edge positions (relation) whose text contains the
  // span, case-insensitively.
  std::vector<int64_t> grounded_ids;
};

struct RationaleBundle {
  std::vector<std::string> steps;
  std::vector<Anchor> anchors;

  // "entity: span" lines then numbered steps; embedding/judging input.
  std::string anchors_text() const;
  std::string rationale_text() const;
};

// Exact prompt bytes extract_rationale and judge send, exposed so cassette
// authors and tests can key fixture files by prompt hash.
std::string extraction_prompt(const std::string& question,
                              const std::string& answer,
                              const graph::TextualGraph& g);

// Renders the extraction prompt, calls the gateway, parses the RationaleChain
// and Anchors sections, and grounds every anchor against the graph's texts.
// Missing sections are retried (fresh completion) up to `reprompts` times,
// then raise ParseFailure. Ungrounded anchors are dropped through `warn`;
// if none survive, NoGroundedAnchors.
RationaleBundle extract_rationale(
    const std::string& question, const std::string& answer,
    const graph::TextualGraph& g, LlmGateway& gw, int reprompts = 2,
    const std::function<void(const std::string&)>& warn = {});

// Re-checks the grounding invariant on an already-built bundle.
bool anchors_grounded(const RationaleBundle& b, const graph::TextualGraph& g);

enum class JudgeKind { relevance, faithfulness };
enum class JudgeLabel { relevant, irrelevant, faithful, not_faithful };

const char* judge_label_name(JudgeLabel label);

std::string judge_prompt(const std::string& question,
                         const RationaleBundle& bundle, JudgeKind kind);

// Label parse is tolerant of case and quoting, but anything that does not
// contain exactly one admissible label raises JudgeUnparseable.
JudgeLabel judge(const std::string& question, const RationaleBundle& bundle,
                 JudgeKind kind, LlmGateway& gw);

}  // namespace gral::gateway
