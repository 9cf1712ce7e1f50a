#include "promptlab/program.hpp"

#include <algorithm>

#include "promptlab/error.hpp"
#include "promptlab/util.hpp"

namespace plab {

namespace {

std::string quoted_field_list(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += (i + 1 == fields.size()) ? " and " : ", ";
    out += "\"" + fields[i] + "\"";
  }
  return out;
}

std::string starting_clause(const std::vector<std::string>& fields) {
  std::string out = "starting with \"" + fields.front() + "\"";
  for (size_t i = 1; i < fields.size(); ++i) out += ", then \"" + fields[i] + "\"";
  return out;
}

// Case-insensitive search for `field` immediately followed by ':'. Returns the
// position of the marker start, or npos.
size_t find_marker(std::string_view text, std::string_view field, size_t from, bool last) {
  const std::string lowered = to_lower(text);
  const std::string needle = to_lower(field) + ":";
  size_t best = std::string::npos;
  size_t pos = lowered.find(needle, from);
  while (pos != std::string::npos) {
    best = pos;
    if (!last) return best;
    pos = lowered.find(needle, pos + 1);
  }
  return best;
}

std::string last_nonempty_line(std::string_view raw) {
  const auto lines = split_lines(raw);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string t = trim(*it);
    if (!t.empty()) return t;
  }
  return "";
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::HelmBaseline: return "helm_baseline";
    case Method::ZeroShotPredict: return "zero_shot_predict";
    case Method::ZeroShotCot: return "zero_shot_cot";
    case Method::Bfrs: return "bfrs";
    case Method::MiproV2: return "miprov2";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  const std::string n = to_lower(trim(name));
  if (n == "helm_baseline" || n == "baseline") return Method::HelmBaseline;
  if (n == "zero_shot_predict" || n == "predict") return Method::ZeroShotPredict;
  if (n == "zero_shot_cot" || n == "cot") return Method::ZeroShotCot;
  if (n == "bfrs") return Method::Bfrs;
  if (n == "miprov2" || n == "mipro") return Method::MiproV2;
  throw InvalidArgument("unknown method: " + name);
}

bool method_uses_cot(Method m) {
  return m == Method::ZeroShotCot || m == Method::Bfrs || m == Method::MiproV2;
}

bool method_is_structured(Method m) { return method_uses_cot(m); }

bool method_uses_scaffold(Method m) { return m != Method::HelmBaseline; }

std::string default_objective(const ModuleSpec& module) {
  std::vector<std::string> produced;
  for (const auto& f : module.output_field_names) {
    if (f != kReasoningField) produced.push_back(f);
  }
  if (produced.empty()) produced.push_back(kOutputField);
  return "Given the fields " + quoted_field_list(module.input_field_names) +
         ", produce the fields " + quoted_field_list(produced);
}

Program init_from_baseline(const std::string& baseline_instruction, Method method) {
  if (trim(baseline_instruction).empty()) {
    throw InvalidArgument("init_from_baseline: baseline instruction must be nonempty");
  }
  ModuleSpec module;
  module.id = 0;
  module.seed_instruction = baseline_instruction;
  module.output_field_names =
      method_uses_cot(method) ? std::vector<std::string>{kReasoningField, kOutputField}
                              : std::vector<std::string>{kOutputField};
  Program program;
  program.modules.push_back(module);
  program.assignment.method = method;
  program.assignment.instructions.push_back(default_objective(module));
  program.assignment.demos.emplace_back();
  validate_program(program);
  return program;
}

void validate_program(const Program& program, int demo_cap) {
  if (program.modules.empty()) throw InvalidArgument("program has no modules");
  if (program.assignment.instructions.size() != program.modules.size() ||
      program.assignment.demos.size() != program.modules.size()) {
    throw InvalidArgument("assignment must cover every module exactly once");
  }
  const Method method = program.assignment.method;
  for (size_t i = 0; i < program.modules.size(); ++i) {
    const auto& module = program.modules[i];
    if (module.output_field_names.empty()) {
      throw InvalidArgument("module output fields must be nonempty");
    }
    if (method_uses_cot(method)) {
      if (module.output_field_names.size() != 2 ||
          module.output_field_names[0] != kReasoningField ||
          module.output_field_names[1] != kOutputField) {
        throw InvalidArgument("CoT module must declare exactly [REASONING, OUTPUT]");
      }
    }
    const auto& demos = program.assignment.demos[i];
    if (static_cast<int>(demos.size()) > demo_cap) {
      throw InvalidArgument("demo count " + std::to_string(demos.size()) +
                            " exceeds cap " + std::to_string(demo_cap));
    }
    if (!method_uses_cot(method) && !demos.empty()) {
      throw InvalidArgument(std::string(method_name(method)) + " programs carry no demos");
    }
  }
}

std::string render_module_prompt(const ModuleSpec& module, const std::string& instruction,
                                 const std::vector<Demonstration>& demos, Method method,
                                 const std::string& module_input) {
  if (method == Method::HelmBaseline) {
    return module.seed_instruction + "\n" + module_input;
  }
  const std::string& input_field = module.input_field_names.front();
  const std::string& final_field = module.output_field_names.back();

  std::string s;
  s += "Your input fields are: " + quoted_field_list(module.input_field_names) + "\n";
  s += "Your output fields are: " + quoted_field_list(module.output_field_names) + "\n";
  s += "Your objective is: " + instruction + "\n";
  if (!demos.empty()) {
    s += "\nIN-CONTEXT EXAMPLES (" + std::to_string(demos.size()) + " Demos):\n\n";
    for (const auto& demo : demos) {
      s += input_field + ": " + demo.module_input + " -> ";
      if (demo.reasoning) s += std::string(kReasoningField) + ": " + *demo.reasoning + ", ";
      s += final_field + ": " + demo.module_output + "\n";
    }
  }
  s += "\n" + input_field + ":\n\n";
  if (!module.seed_instruction.empty()) s += module.seed_instruction + "\n";
  s += module_input + "\n";
  s += "\nRespond with the corresponding output fields, " +
       starting_clause(module.output_field_names) + ".";
  return s;
}

std::string render_prompt(const Program& program, const std::string& item_input) {
  validate_program(program);
  if (program.modules.size() != 1) {
    // Single-stage programs are the execution target; the multi-module data
    // model exists for assignments, not for end-to-end rendering.
    throw InvalidArgument("render_prompt requires a single-module program");
  }
  return render_module_prompt(program.modules[0], program.assignment.instructions[0],
                              program.assignment.demos[0], program.assignment.method,
                              item_input);
}

ParsedOutput parse_response(const std::string& raw, Method method) {
  if (trim(raw).empty()) throw ParseError("empty completion");
  if (!method_uses_cot(method)) return {std::nullopt, trim(raw)};

  const std::string output_marker = std::string(kOutputField) + ":";
  const size_t out_pos = find_marker(raw, kOutputField, 0, /*last=*/true);
  if (out_pos == std::string::npos) {
    return {std::nullopt, last_nonempty_line(raw)};
  }
  const std::string output = trim(raw.substr(out_pos + output_marker.size()));

  std::optional<std::string> reasoning;
  const size_t r_pos = find_marker(raw.substr(0, out_pos), kReasoningField, 0, /*last=*/false);
  if (r_pos != std::string::npos) {
    const size_t begin = r_pos + std::string(kReasoningField).size() + 1;
    reasoning = trim(raw.substr(begin, out_pos - begin));
  }
  return {reasoning, output};
}

std::string canonical_assignment(const PromptAssignment& assignment) {
  std::string s;
  for (size_t i = 0; i < assignment.instructions.size(); ++i) {
    s += "m";
    s += std::to_string(i);
    s += '\x1e';
    s += assignment.instructions[i];
    s += '\x1e';
    if (i < assignment.demos.size()) {
      for (const auto& demo : assignment.demos[i]) {
        s += demo.source_example_id;
        s += '\x1f';
      }
    }
    s += '\x1d';
  }
  return s;
}

}  // namespace plab
