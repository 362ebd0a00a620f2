#pragma once

#include <string>
#include <string_view>

#include "insec/corpus.hpp"
#include "insec/errors.hpp"
#include "insec/text.hpp"

namespace insec {

/// Where and in what format the attack string is inserted into (p, s).
/// line_above + comment is the default; the other six positions exist for
/// ablation runs.
enum class AttackPosition {
  line_above,
  prefix_start,
  line_start,
  prefix_end,
  suffix_start,
  line_below,
  suffix_end,
};

enum class AttackFormat { comment, raw };

struct AttackTemplate {
  AttackPosition position = AttackPosition::line_above;
  AttackFormat format = AttackFormat::comment;
};

inline const char* position_name(AttackPosition p) {
  switch (p) {
    case AttackPosition::line_above: return "line_above";
    case AttackPosition::prefix_start: return "prefix_start";
    case AttackPosition::line_start: return "line_start";
    case AttackPosition::prefix_end: return "prefix_end";
    case AttackPosition::suffix_start: return "suffix_start";
    case AttackPosition::line_below: return "line_below";
    case AttackPosition::suffix_end: return "suffix_end";
  }
  return "?";
}

inline AttackPosition parse_position(const std::string& name) {
  if (name == "line_above") return AttackPosition::line_above;
  if (name == "prefix_start") return AttackPosition::prefix_start;
  if (name == "line_start") return AttackPosition::line_start;
  if (name == "prefix_end") return AttackPosition::prefix_end;
  if (name == "suffix_start") return AttackPosition::suffix_start;
  if (name == "line_below") return AttackPosition::line_below;
  if (name == "suffix_end") return AttackPosition::suffix_end;
  throw Error(Errc::config_error, "unknown attack position: " + name);
}

/// The adversarial pair (p', s') produced by applying a template.
struct AdversarialInput {
  std::string prefix_adv;
  std::string suffix_adv;
};

/// Format sigma as a single-line comment for the task language:
/// marker + single space + sigma.
inline std::string comment_wrap(std::string_view sigma, Language language) {
  if (sigma.find('\n') != std::string_view::npos) {
    throw Error(Errc::multiline_attack_string,
                "attack string contains a newline");
  }
  std::string out = comment_marker(language);
  out.push_back(' ');
  out.append(sigma);
  return out;
}

/// Apply the attack template: insert sigma into the task's (p, s) and return
/// the adversarial pair. sigma is inserted verbatim, no trimming.
inline AdversarialInput apply_template(const AttackTemplate& tmpl,
                                       std::string_view sigma,
                                       const CompletionTask& task) {
  if (sigma.find('\n') != std::string_view::npos) {
    throw Error(Errc::multiline_attack_string,
                "attack string contains a newline");
  }
  const std::string payload = tmpl.format == AttackFormat::comment
                                  ? comment_wrap(sigma, task.language)
                                  : std::string(sigma);

  AdversarialInput out{task.prefix, task.suffix};
  const auto cursor = cursor_line(task.prefix);
  const auto indent = leading_indent(cursor);

  switch (tmpl.position) {
    case AttackPosition::line_above: {
      // Insert an indented payload line directly above the cursor line; the
      // suffix is never touched.
      const std::size_t cursor_start = task.prefix.size() - cursor.size();
      out.prefix_adv = task.prefix.substr(0, cursor_start);
      out.prefix_adv.append(indent);
      out.prefix_adv.append(payload);
      out.prefix_adv.push_back('\n');
      out.prefix_adv.append(cursor);
      break;
    }
    case AttackPosition::prefix_start:
      out.prefix_adv = payload + "\n" + task.prefix;
      break;
    case AttackPosition::line_start: {
      const std::size_t cursor_start = task.prefix.size() - cursor.size();
      out.prefix_adv = task.prefix.substr(0, cursor_start);
      out.prefix_adv.append(payload);
      out.prefix_adv.push_back(' ');
      out.prefix_adv.append(cursor);
      break;
    }
    case AttackPosition::prefix_end:
      out.prefix_adv = task.prefix;
      out.prefix_adv.append(payload);
      break;
    case AttackPosition::suffix_start:
      out.suffix_adv = payload + task.suffix;
      break;
    case AttackPosition::line_below: {
      const std::string inserted = std::string(indent) + payload + "\n";
      const auto pos = task.suffix.find('\n');
      if (pos == std::string::npos) {
        out.suffix_adv = inserted + task.suffix;
      } else {
        out.suffix_adv = task.suffix.substr(0, pos + 1) + inserted +
                         task.suffix.substr(pos + 1);
      }
      break;
    }
    case AttackPosition::suffix_end:
      out.suffix_adv = task.suffix;
      out.suffix_adv.push_back('\n');
      out.suffix_adv.append(payload);
      break;
  }
  return out;
}

}  // namespace insec
