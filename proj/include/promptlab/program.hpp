#pragma once

#include <optional>
#include <string>
#include <vector>

namespace plab {

// The five prompting methods of the benchmark harness. HelmBaseline renders
// the raw instruction + item text; all others use the structured template
// (field declarations, objective, optional demos, response directive).
enum class Method {
  HelmBaseline,
  ZeroShotPredict,
  ZeroShotCot,
  Bfrs,
  MiproV2,
};

inline constexpr int kDemoCap = 3;
inline constexpr const char* kReasoningField = "REASONING";
inline constexpr const char* kOutputField = "OUTPUT";

const char* method_name(Method m);
Method method_from_name(const std::string& name);  // throws InvalidArgument
bool method_uses_cot(Method m);                    // ZeroShotCot, Bfrs, MiproV2
bool method_is_structured(Method m);               // same set; the "structured" row group
bool method_uses_scaffold(Method m);               // everything except HelmBaseline

struct ModuleSpec {
  int id = 0;
  std::vector<std::string> input_field_names{"INPUTS"};
  std::vector<std::string> output_field_names{"OUTPUT"};
  std::string seed_instruction;  // the benchmark's baseline instruction
};

struct Demonstration {
  std::string module_input;
  std::optional<std::string> reasoning;
  std::string module_output;
  std::string source_example_id;
};

// One concrete binding of every instruction and demonstration slot.
struct PromptAssignment {
  std::vector<std::string> instructions;           // per module
  std::vector<std::vector<Demonstration>> demos;   // per module
  Method method = Method::HelmBaseline;
};

struct Program {
  std::vector<ModuleSpec> modules;
  PromptAssignment assignment;
};

struct ParsedOutput {
  std::optional<std::string> reasoning;
  std::string output;
};

// The generic objective a freshly seeded module carries before any
// instruction optimization ("Given the fields "INPUTS", produce the fields
// "OUTPUT""). Reasoning fields are never named in the objective.
std::string default_objective(const ModuleSpec& module);

// Single-module program seeded from a benchmark's baseline instruction.
// Demos start empty; CoT methods get [REASONING, OUTPUT] output fields.
Program init_from_baseline(const std::string& baseline_instruction, Method method);

// Throws InvalidArgument on violated invariants (demo cap, zero-shot methods
// carrying demos, CoT field shape, module/assignment arity mismatch).
void validate_program(const Program& program, int demo_cap = kDemoCap);

// Deterministic render; byte-identical for equal (program, item_input).
std::string render_prompt(const Program& program, const std::string& item_input);

// Per-module render primitive (render_prompt delegates here for module 0).
std::string render_module_prompt(const ModuleSpec& module, const std::string& instruction,
                                 const std::vector<Demonstration>& demos, Method method,
                                 const std::string& module_input);

// Inverse of the response contract. CoT methods: text after the last
// "OUTPUT:" marker is the output, text between "REASONING:" and that marker
// is the reasoning; markers match case-insensitively. No output marker:
// falls back to the last nonempty line. Other methods: whole trimmed text.
// Empty completions raise ParseError (scored 0 downstream).
ParsedOutput parse_response(const std::string& raw, Method method);

// Stable byte encoding of (instructions, demo source ids) used as the hash
// input of the simulated LM; independent of method and render details.
std::string canonical_assignment(const PromptAssignment& assignment);

}  // namespace plab
