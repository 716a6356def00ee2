#include "gral/prompts.hpp"

#include <set>

#include "gral/error.hpp"

namespace gral::prompts {

namespace {

const std::string kExtraction = R"(You are a helpful assistant for anchor and rationale extraction from graph evidence.

Inputs: a question, its answer, and a textualized graph database (nodes/edges described in text).
Goal: extract (1) a rationale chain that links the question to the answer using graph evidence, and (2) a small set of anchors (key intermediate entities/relations) that can be grounded to graph nodes/edges.

Definitions:
- Rationale chain: an ordered list of short reasoning steps. Each step should mention the evidence used and move closer to the answer.
- Anchors: reasoning-critical intermediate entities/relations that appear in the graph database and are necessary for the reasoning.

Constraints:
- Use only information supported by the provided graph database and the given answer.
- Anchors must be verbatim spans from the graph database (copy exact surface forms).
- Keep each rationale step concise.

Output format (follow exactly):
1. RationaleChain: a numbered list of steps (3-6 steps).
2. Anchors: a bullet list of anchors. For each anchor, provide its type (entity or relation) and the copied span.

Question: {question}

Answer: {answer}

Graph DataBase: {graph}

Now produce the output.
)";

const std::string kGeneratorQa = R"(Textualized Graph: {graph}.

Please answer the given question.
Question: {question}

Answer:
)";

const std::string kGeneratorExplagraphs = R"(Textualized Graph: {graph}.

Argument 1: {arg1}

Argument 2: {arg2}

Question: Do argument 1 and argument 2 support or counter each other? Answer in one word in the form of 'support' or 'counter'.

Answer:
)";

const std::string kJudgeRelevance = R"(Evaluate the relevance of the anchor and rationale in answering the QUESTION. The relevant anchor and rationale contain information that helps answer the question, even if partially. Return one of the following labels: 'Relevant', or 'Irrelevant' without any additional response.

QUESTION: {question}

Anchor and rationale:
{rationale}
)";

const std::string kJudgeFaithfulness = R"(Evaluate the following anchor and rationale for faithfulness in answering the QUESTION. A faithful response should include information that helps answer the question, even if partially, avoid inventing new details, and not contradict the context. Return one of the following labels: 'Faithful' or 'Not Faithful' without any additional response.

QUESTION: {question}

Anchor and rationale:
{rationale}
)";

}  // namespace

TemplateId template_from_name(const std::string& name) {
  if (name == "extraction") return TemplateId::extraction;
  if (name == "generator_qa") return TemplateId::generator_qa;
  if (name == "generator_explagraphs") return TemplateId::generator_explagraphs;
  if (name == "judge_relevance") return TemplateId::judge_relevance;
  if (name == "judge_faithfulness") return TemplateId::judge_faithfulness;
  throw Error(Errc::unknown_template, name);
}

const char* template_name(TemplateId id) {
  switch (id) {
    case TemplateId::extraction: return "extraction";
    case TemplateId::generator_qa: return "generator_qa";
    case TemplateId::generator_explagraphs: return "generator_explagraphs";
    case TemplateId::judge_relevance: return "judge_relevance";
    case TemplateId::judge_faithfulness: return "judge_faithfulness";
  }
  return "?";
}

const std::string& template_body(TemplateId id) {
  switch (id) {
    case TemplateId::extraction: return kExtraction;
    case TemplateId::generator_qa: return kGeneratorQa;
    case TemplateId::generator_explagraphs: return kGeneratorExplagraphs;
    case TemplateId::judge_relevance: return kJudgeRelevance;
    case TemplateId::judge_faithfulness: return kJudgeFaithfulness;
  }
  throw Error(Errc::unknown_template, "bad template id");
}

std::vector<std::string> template_slots(TemplateId id) {
  const std::string& body = template_body(id);
  std::vector<std::string> slots;
  std::set<std::string> seen;
  for (size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') continue;
    size_t close = body.find('}', i + 1);
    if (close == std::string::npos) break;
    std::string name = body.substr(i + 1, close - i - 1);
    if (seen.insert(name).second) slots.push_back(name);
    i = close;
  }
  return slots;
}

std::string render_prompt(TemplateId id,
                          const std::map<std::string, std::string>& slots) {
  const std::string& body = template_body(id);
  std::string out;
  out.reserve(body.size());
  for (size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '{') {
      size_t close = body.find('}', i + 1);
      if (close != std::string::npos) {
        std::string name = body.substr(i + 1, close - i - 1);
        auto it = slots.find(name);
        if (it == slots.end())
          throw Error(Errc::missing_slot, std::string(template_name(id)) +
                                              " needs slot '" + name + "'");
        out += it->second;
        i = close;
        continue;
      }
    }
    out.push_back(body[i]);
  }
  return out;
}

}  // namespace gral::prompts
