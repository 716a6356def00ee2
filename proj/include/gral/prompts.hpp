#pragma once

#include <map>
#include <string>
#include <vector>

namespace gral::prompts {

// The five prompt bodies shipped with the pipeline. Slot names:
//   extraction:             question, answer, graph
//   generator_qa:           graph, question
//   generator_explagraphs:  graph, arg1, arg2
//   judge_relevance:        question, rationale
//   judge_faithfulness:     question, rationale
enum class TemplateId {
  extraction,
  generator_qa,
  generator_explagraphs,
  judge_relevance,
  judge_faithfulness,
};

TemplateId template_from_name(const std::string& name);
const char* template_name(TemplateId id);
const std::string& template_body(TemplateId id);
std::vector<std::string> template_slots(TemplateId id);

// Substitutes every {slot} occurrence. A slot without a binding raises
// MissingSlot; unused bindings are ignored.
std::string render_prompt(TemplateId id,
                          const std::map<std::string, std::string>& slots);

}  // namespace gral::prompts
