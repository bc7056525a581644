#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "versa/core/events.hpp"
#include "versa/core/json.hpp"

namespace versa::browser {

// Data attribute on which bids are persisted in the page.
inline constexpr std::string_view kBidAttribute = "data-versa-bid";

// Geometry and accessibility metadata reported by the in-page annotator.
// Coordinates are viewport-relative CSS pixels.
struct AnnotatedElement {
  std::string bid;
  std::string tag;
  std::string role;
  std::string name;
  events::BBox bbox;
  bool visible = true;
  bool interactable = true;
  bool in_viewport = true;
  std::vector<int> frame_path;  // empty for the top document

  bool operator==(const AnnotatedElement&) const = default;
};

struct AnnotationPayload {
  std::vector<AnnotatedElement> elements;
  events::Viewport viewport;
  std::vector<std::vector<int>> skipped_frames;  // cross-origin frames

  bool operator==(const AnnotationPayload&) const = default;
};

json to_json(const AnnotationPayload& p);
// Throws std::invalid_argument on malformed payloads or duplicate bids.
AnnotationPayload payload_from_json(const json& j);

// The in-page script that produces the payload, evaluated by devtools-based
// drivers. Calling convention: the script evaluates to an object with
// annotate() and clear() functions; annotate() returns the payload JSON.
inline constexpr std::string_view kAnnotatorAsset = "browser/som_annotator.js";

}  // namespace versa::browser
