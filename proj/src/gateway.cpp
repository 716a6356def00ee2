#include "gral/gateway.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "gral/error.hpp"
#include "gral/prompts.hpp"
#include "gral/util.hpp"

namespace gral::gateway {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post_json(const std::string& url, const Headers& headers,
                         const std::string& body) override {
    // split http(s)://host[:port] from the path
    size_t scheme = url.find("://");
    size_t path_pos = scheme == std::string::npos
                          ? url.find('/')
                          : url.find('/', scheme + 3);
    std::string base = path_pos == std::string::npos ? url : url.substr(0, path_pos);
    std::string path = path_pos == std::string::npos ? "/" : url.substr(path_pos);
    httplib::Client client(base);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers hl;
    for (const auto& [k, v] : headers) hl.emplace(k, v);
    auto res = client.Post(path, hl, body, "application/json");
    if (!res) return HttpResponse{0, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body};
  }
};

std::string fixture_path(const std::string& dir, const std::string& prompt) {
  return (fs::path(dir) / (util::sha256_hex(prompt) + ".txt")).string();
}

std::string strip_list_marker(const std::string& line) {
  std::string s = util::trim(line);
  size_t i = 0;
  // a bullet needs trailing whitespace; "**emphasis**" is not a marker
  if (i < s.size() && (s[i] == '-' || s[i] == '*') &&
      (i + 1 == s.size() ||
       std::isspace(static_cast<unsigned char>(s[i + 1])))) {
    ++i;
  } else {
    size_t d = i;
    while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
    if (d > i && d < s.size() && (s[d] == '.' || s[d] == ')')) i = d + 1;
  }
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

std::string strip_emphasis(std::string s) {
  s = util::trim(s);
  while (s.size() >= 2 && s.substr(0, 2) == "**") s = util::trim(s.substr(2));
  while (s.size() >= 2 && s.substr(s.size() - 2) == "**")
    s = util::trim(s.substr(0, s.size() - 2));
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    s = util::trim(s.substr(1, s.size() - 2));
  return s;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
  return util::lowercase(haystack).find(util::lowercase(needle)) !=
         std::string::npos;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  lines.push_back(cur);
  return lines;
}

struct ParsedSections {
  std::vector<std::string> steps;
  std::vector<std::pair<Anchor::Kind, std::string>> anchors;
  bool saw_steps_header = false;
  bool saw_anchors_header = false;
};

ParsedSections parse_extraction(const std::string& completion,
                                const std::function<void(const std::string&)>& warn) {
  ParsedSections out;
  enum class Section { none, steps, anchors } section = Section::none;
  for (const std::string& raw : split_lines(completion)) {
    std::string stripped = strip_list_marker(raw);
    std::string flat = util::lowercase(strip_emphasis(stripped));
    if (flat.find("rationalechain") == 0 || flat.find("rationale chain") == 0) {
      section = Section::steps;
      out.saw_steps_header = true;
      continue;
    }
    if (flat.find("anchors") == 0) {
      section = Section::anchors;
      out.saw_anchors_header = true;
      continue;
    }
    if (util::trim(raw).empty()) continue;
    if (section == Section::steps) {
      std::string body = strip_emphasis(stripped);
      if (body.empty()) continue;
      bool had_marker = stripped != util::trim(raw);
      if (!had_marker && !out.steps.empty()) {
        // no list marker: continuation of the previous step
        out.steps.back() += " " + body;
      } else {
        out.steps.push_back(body);
      }
    } else if (section == Section::anchors) {
      std::string body = stripped;
      size_t colon = body.find(':');
      if (colon == std::string::npos) {
        if (warn) warn("anchor line without a type: " + raw);
        continue;
      }
      std::string kind_token = util::lowercase(strip_emphasis(body.substr(0, colon)));
      std::string span = strip_emphasis(body.substr(colon + 1));
      Anchor::Kind kind;
      if (kind_token.find("entity") != std::string::npos) {
        kind = Anchor::Kind::entity;
      } else if (kind_token.find("relation") != std::string::npos) {
        kind = Anchor::Kind::relation;
      } else {
        if (warn) warn("anchor with unknown type '" + kind_token + "'");
        continue;
      }
      if (span.empty()) {
        if (warn) warn("anchor with empty span");
        continue;
      }
      out.anchors.emplace_back(kind, span);
    }
  }
  return out;
}

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport() {
  return std::make_shared<HttplibTransport>();
}

LlmGateway::LlmGateway(GatewayMode mode, std::string fixture_dir,
                       std::string base_url,
                       std::shared_ptr<HttpTransport> transport,
                       std::string api_key_env)
    : mode_(mode),
      fixture_dir_(std::move(fixture_dir)),
      base_url_(std::move(base_url)),
      transport_(std::move(transport)),
      api_key_env_(std::move(api_key_env)) {
  if (mode_ != GatewayMode::fixture && !transport_)
    transport_ = make_httplib_transport();
}

std::string LlmGateway::complete(const std::string& prompt,
                                 const CompletionParams& params) {
  if (mode_ == GatewayMode::fixture) {
    std::string path = fixture_path(fixture_dir_, prompt);
    if (!fs::exists(path))
      throw Error(Errc::fixture_miss,
                  "no completion fixture " + path + " for this prompt");
    return util::read_file(path);
  }
  std::string completion = call_service(prompt, params);
  if (mode_ == GatewayMode::record)
    util::write_file(fixture_path(fixture_dir_, prompt), completion);
  return completion;
}

std::string LlmGateway::call_service(const std::string& prompt,
                                     const CompletionParams& params) {
  if (base_url_.empty())
    throw Error(Errc::provider_unavailable, "no base_url configured");
  json body;
  body["model"] = params.model;
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});

  Headers headers{{"Content-Type", "application/json"}};
  if (const char* key = std::getenv(api_key_env_.c_str()))
    headers.emplace_back("Authorization", std::string("Bearer ") + key);

  const std::string url = base_url_ + "/v1/chat/completions";
  const int max_attempts = 5;
  HttpResponse resp;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(backoff_base_ms_ << (attempt - 1)));
    ++network_calls_;
    resp = transport_->post_json(url, headers, body.dump());
    if (resp.ok()) {
      try {
        json reply = json::parse(resp.body);
        return reply.at("choices").at(0).at("message").at("content")
            .get<std::string>();
      } catch (const json::exception& e) {
        throw Error(Errc::provider_unavailable,
                    std::string("malformed completion payload: ") + e.what());
      }
    }
    bool retryable = resp.status == 0 || resp.status == 429 || resp.status >= 500;
    if (!retryable)
      throw Error(Errc::provider_unavailable,
                  "status " + std::to_string(resp.status) + ": " + resp.body);
  }
  if (resp.status == 429)
    throw Error(Errc::rate_limited, "still rate limited after " +
                                        std::to_string(max_attempts) + " attempts");
  throw Error(Errc::provider_unavailable,
              "gave up after " + std::to_string(max_attempts) + " attempts (status " +
                  std::to_string(resp.status) + ")");
}

std::string RationaleBundle::anchors_text() const {
  std::vector<std::string> spans;
  for (const Anchor& a : anchors) spans.push_back(a.span);
  return util::join(spans, "; ");
}

std::string RationaleBundle::rationale_text() const {
  std::string out = "Anchors:\n";
  for (const Anchor& a : anchors) {
    out += "- ";
    out += a.kind == Anchor::Kind::entity ? "entity" : "relation";
    out += ": " + a.span + "\n";
  }
  out += "RationaleChain:\n";
  for (size_t i = 0; i < steps.size(); ++i)
    out += std::to_string(i + 1) + ". " + steps[i] + "\n";
  return out;
}

std::string extraction_prompt(const std::string& question,
                              const std::string& answer,
                              const graph::TextualGraph& g) {
  return prompts::render_prompt(
      prompts::TemplateId::extraction,
      {{"question", question}, {"answer", answer}, {"graph", graph::linearize(g)}});
}

RationaleBundle extract_rationale(
    const std::string& question, const std::string& answer,
    const graph::TextualGraph& g, LlmGateway& gw, int reprompts,
    const std::function<void(const std::string&)>& warn) {
  std::string prompt = extraction_prompt(question, answer, g);

  ParsedSections parsed;
  bool usable = false;
  for (int attempt = 0; attempt <= reprompts; ++attempt) {
    std::string completion = gw.complete(prompt);
    parsed = parse_extraction(completion, warn);
    usable = !parsed.steps.empty() && parsed.saw_anchors_header &&
             !parsed.anchors.empty();
    if (usable) break;
  }
  if (!usable)
    throw Error(Errc::parse_failure,
                "extraction output lacked RationaleChain/Anchors sections after " +
                    std::to_string(reprompts + 1) + " attempts");

  RationaleBundle bundle;
  bundle.steps = parsed.steps;
  for (const auto& [kind, span] : parsed.anchors) {
    Anchor a;
    a.kind = kind;
    a.span = span;
    if (kind == Anchor::Kind::entity) {
      for (const auto& [id, text] : g.nodes())
        if (contains_ci(text, span)) a.grounded_ids.push_back(id);
    } else {
      const auto& edges = g.edges();
      for (size_t i = 0; i < edges.size(); ++i)
        if (contains_ci(edges[i].text, span))
          a.grounded_ids.push_back(int64_t(i));
    }
    if (a.grounded_ids.empty()) {
      if (warn)
        warn("dropping ungrounded " +
             std::string(kind == Anchor::Kind::entity ? "entity" : "relation") +
             " anchor '" + span + "'");
      continue;
    }
    bundle.anchors.push_back(std::move(a));
  }
  if (bundle.anchors.empty())
    throw Error(Errc::no_grounded_anchors,
                "no anchor span matched any node or edge text");
  return bundle;
}

bool anchors_grounded(const RationaleBundle& b, const graph::TextualGraph& g) {
  for (const Anchor& a : b.anchors) {
    if (a.grounded_ids.empty()) return false;
    for (int64_t id : a.grounded_ids) {
      if (a.kind == Anchor::Kind::entity) {
        if (!g.has_node(id) || !contains_ci(g.node_text(id), a.span)) return false;
      } else {
        if (id < 0 || size_t(id) >= g.edge_count() ||
            !contains_ci(g.edges()[size_t(id)].text, a.span))
          return false;
      }
    }
  }
  return true;
}

const char* judge_label_name(JudgeLabel label) {
  switch (label) {
    case JudgeLabel::relevant: return "Relevant";
    case JudgeLabel::irrelevant: return "Irrelevant";
    case JudgeLabel::faithful: return "Faithful";
    case JudgeLabel::not_faithful: return "Not Faithful";
  }
  return "?";
}

std::string judge_prompt(const std::string& question,
                         const RationaleBundle& bundle, JudgeKind kind) {
  auto id = kind == JudgeKind::relevance ? prompts::TemplateId::judge_relevance
                                         : prompts::TemplateId::judge_faithfulness;
  return prompts::render_prompt(
      id, {{"question", question}, {"rationale", bundle.rationale_text()}});
}

JudgeLabel judge(const std::string& question, const RationaleBundle& bundle,
                 JudgeKind kind, LlmGateway& gw) {
  std::string prompt = judge_prompt(question, bundle, kind);
  std::string reply = util::lowercase(util::trim(gw.complete(prompt)));
  if (kind == JudgeKind::relevance) {
    if (reply.find("irrelevant") != std::string::npos) return JudgeLabel::irrelevant;
    if (reply.find("relevant") != std::string::npos) return JudgeLabel::relevant;
  } else {
    if (reply.find("not faithful") != std::string::npos)
      return JudgeLabel::not_faithful;
    if (reply.find("faithful") != std::string::npos) return JudgeLabel::faithful;
  }
  throw Error(Errc::judge_unparseable, "judge replied '" + reply + "'");
}

}  // namespace gral::gateway
