#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "versa/core/events.hpp"

namespace versa::tools {

// A converter failed or the file type is not viewable; the message is meant
// for the agent.
class ConversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Converted {
  std::string markdown;
  std::vector<std::string> notes;    // lossy-conversion warnings
  std::optional<events::Image> image;
};

struct ConvertContext {
  std::string path;  // for messages and extension-specific behaviour
};

// One pluggable rich-format adapter.
struct Converter {
  std::string_view name;
  std::string_view mime;
  std::vector<std::string_view> extensions;  // lower-case, with leading dot
  std::function<bool(std::string_view bytes)> sniff;
  std::function<Converted(std::string_view bytes, const ConvertContext&)> convert;
};

// The static adapter table, in detection priority order.
std::span<const Converter> converters();

// Extensions returned verbatim as plain text.
std::span<const std::string_view> plaintext_extensions();

// Extension first, then content sniffing. nullptr means plain text (for
// valid UTF-8 without NUL bytes) or unsupported binary.
const Converter* detect_converter(std::string_view path, std::string_view bytes);

// Audio transcription is off unless a command is configured, e.g. from
// VERSA_AUDIO_TRANSCRIBER. The command gets the audio file path as its last
// argument and prints the transcript on stdout.
void set_audio_transcriber(std::vector<std::string> command);

// The file-viewing entry point: plain text verbatim, rich formats converted
// to markdown, images as pixels plus metadata.
events::FileView view_file_bytes(std::string path, std::string_view bytes);

// Individual converters, exposed for tests and fixture tooling.
Converted html_to_markdown(std::string_view html);
Converted pdf_to_markdown(std::string_view pdf);
Converted xlsx_to_markdown(std::string_view bytes);
Converted docx_to_markdown(std::string_view bytes);
Converted pptx_to_markdown(std::string_view bytes);

std::string pipe_table(const std::vector<std::vector<std::string>>& rows);

}  // namespace versa::tools
