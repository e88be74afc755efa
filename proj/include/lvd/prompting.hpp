#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvd/dsl.hpp"

namespace lvd::prompting {

class PromptError : public std::runtime_error {
 public:
  explicit PromptError(const std::string& what) : std::runtime_error(what) {}
};

// One caption/reasoning/layout triple for the prompt's example section.
struct InContextExample {
  std::string caption;
  std::string reasoning;
  std::string dsl_text;  // verbatim "Frame k: ..." lines + background line

  std::string assistant_text() const {
    return "Reasoning: " + reasoning + "\n" + dsl_text;
  }
};

struct PromptParams {
  int width = 512;
  int height = 512;
  int frames = 6;
  double fps = 2.0;
};

struct PromptBundle {
  std::string system_text;
  std::vector<InContextExample> examples;
  std::string query_caption;
};

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

inline bool operator==(const ChatMessage& a, const ChatMessage& b) {
  return a.role == b.role && a.content == b.content;
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PromptError("cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Small counts are spelled out in the instruction text ("six frames",
// "two frames per second").
inline std::string number_word(int n) {
  static const char* words[] = {"zero", "one", "two",  "three", "four",
                                "five", "six", "seven", "eight", "nine",
                                "ten",  "eleven", "twelve", "thirteen",
                                "fourteen", "fifteen", "sixteen", "seventeen",
                                "eighteen", "nineteen", "twenty"};
  if (n >= 0 && n <= 20) return words[n];
  return std::to_string(n);
}

inline std::string fps_word(double fps) {
  double r = std::floor(fps + 0.5);
  if (std::abs(fps - r) < 1e-9 && r >= 0 && r <= 20)
    return number_word(static_cast<int>(r));
  std::ostringstream os;
  os << fps;
  return os.str();
}

}  // namespace detail

inline constexpr const char* kExampleSlot = "[In-context examples]";

// The on-disk template mirrors the instruction sheet: system paragraphs, the
// example slot line, then "Caption: {caption}" / "Reasoning:".
struct PromptTemplate {
  std::string text;

  static PromptTemplate load(const std::string& path) {
    return {detail::read_file(path)};
  }

  std::string render_params(const PromptParams& p) const {
    std::string out = text;
    detail::replace_all(out, "{width}", std::to_string(p.width));
    detail::replace_all(out, "{height}", std::to_string(p.height));
    detail::replace_all(out, "{frames}", detail::number_word(p.frames));
    detail::replace_all(out, "{fps}", detail::fps_word(p.fps));
    return out;
  }
};

// Parses a fixture file of the form "Caption: ...\nReasoning: ...\nFrame ...".
// The layout lines are kept verbatim and must parse.
inline InContextExample load_example(const std::string& path) {
  std::string text = detail::read_file(path);
  std::vector<std::string> lines = lvd::detail::split_lines(text);
  if (lines.empty() || lines[0].rfind("Caption: ", 0) != 0)
    throw PromptError("example file must start with \"Caption: \": " + path);
  InContextExample ex;
  ex.caption = lines[0].substr(9);

  size_t reasoning_at = 0, frame_at = 0, background_at = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (!reasoning_at && lines[i].rfind("Reasoning: ", 0) == 0) reasoning_at = i;
    if (!frame_at && lvd::detail::match_frame_line(lines[i])) frame_at = i;
    if (!background_at && lines[i].rfind("Background keyword:", 0) == 0)
      background_at = i;
  }
  if (!reasoning_at || !frame_at || !background_at || reasoning_at >= frame_at ||
      frame_at >= background_at)
    throw PromptError("example file missing Reasoning/Frame/Background structure: " +
                      path);

  std::ostringstream reasoning;
  reasoning << lines[reasoning_at].substr(11);
  for (size_t i = reasoning_at + 1; i < frame_at; ++i)
    if (!lvd::detail::strip(lines[i]).empty()) reasoning << "\n" << lines[i];
  ex.reasoning = reasoning.str();

  std::ostringstream dsl_text;
  for (size_t i = frame_at; i <= background_at; ++i) {
    if (i > frame_at) dsl_text << "\n";
    dsl_text << lines[i];
  }
  ex.dsl_text = dsl_text.str();

  parse_dsl(ex.assistant_text());  // fixtures must hold the layout grammar
  return ex;
}

// Built-in example fixtures in prompt order; counts 1/3/5 take a prefix.
inline std::vector<InContextExample> load_examples(const std::string& data_root,
                                                   int count) {
  static const char* files[] = {"examples/01_woman_man.txt", "examples/02_red_ball.txt",
                                "examples/03_painting.txt", "examples/04_dog_beach.txt",
                                "examples/05_rock_fall.txt"};
  if (count < 0 || count > 5)
    throw PromptError("example count must be in 0..5, got " + std::to_string(count));
  std::vector<InContextExample> out;
  for (int i = 0; i < count; ++i)
    out.push_back(load_example(data_root + "/" + files[i]));
  return out;
}

inline PromptBundle make_bundle(const PromptTemplate& tmpl,
                                std::vector<InContextExample> examples,
                                const std::string& query_caption,
                                const PromptParams& params = {}) {
  std::string rendered = tmpl.render_params(params);
  const std::string marker = std::string("\n\n") + kExampleSlot + "\n\n";
  size_t at = rendered.find(marker);
  if (at == std::string::npos)
    throw PromptError("template lacks the example slot line");
  std::string tail = rendered.substr(at + marker.size());
  if (tail != "Caption: {caption}\nReasoning:\n" && tail != "Caption: {caption}\nReasoning:")
    throw PromptError("template must end with the caption/reasoning block");
  PromptBundle b;
  b.system_text = rendered.substr(0, at);
  b.examples = std::move(examples);
  b.query_caption = query_caption;
  return b;
}

// Chat-role layout: instructions as the system message, each example caption
// as a user turn with the example output as the assistant turn, then the
// query caption. No trailing "Reasoning:" line in chat mode.
inline std::vector<ChatMessage> build_messages(const PromptBundle& bundle) {
  if (lvd::detail::strip(bundle.query_caption).empty())
    throw PromptError("EmptyCaption");
  std::vector<ChatMessage> msgs;
  msgs.push_back({"system", bundle.system_text});
  for (const InContextExample& ex : bundle.examples) {
    msgs.push_back({"user", "Caption: " + ex.caption});
    msgs.push_back({"assistant", ex.assistant_text()});
  }
  msgs.push_back({"user", "Caption: " + bundle.query_caption});
  return msgs;
}

// Single-text rendering: caption and output lines of one example stay
// adjacent; blocks are separated by blank lines.
inline std::string flatten_messages(const std::vector<ChatMessage>& msgs) {
  std::string out;
  for (size_t i = 0; i < msgs.size(); ++i) {
    if (i > 0) {
      bool tight = msgs[i - 1].role == "user" && msgs[i].role == "assistant";
      out += tight ? "\n" : "\n\n";
    }
    out += msgs[i].content;
  }
  return out;
}

// Web-interface style: everything in one text, ending with "Reasoning:".
inline std::string build_merged_prompt(const PromptBundle& bundle) {
  return flatten_messages(build_messages(bundle)) + "\nReasoning:";
}

}  // namespace lvd::prompting
