#include "versa/browser/annotation.hpp"

#include <set>
#include <stdexcept>

namespace versa::browser {

namespace {

json bbox_json(const events::BBox& b) { return {{"x", b.x}, {"y", b.y}, {"width", b.width}, {"height", b.height}}; }

events::BBox bbox_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("width").get<double>(), j.at("height").get<double>()};
}

}  // namespace

json to_json(const AnnotationPayload& p) {
  json elements = json::array();
  for (const auto& e : p.elements) {
    elements.push_back({{"bid", e.bid},
                        {"tag", e.tag},
                        {"role", e.role},
                        {"name", e.name},
                        {"bbox", bbox_json(e.bbox)},
                        {"visible", e.visible},
                        {"interactable", e.interactable},
                        {"in_viewport", e.in_viewport},
                        {"frame_path", e.frame_path}});
  }
  const auto& v = p.viewport;
  return {{"elements", elements},
          {"viewport",
           {{"width", v.width},
            {"height", v.height},
            {"scroll_x", v.scroll_x},
            {"scroll_y", v.scroll_y},
            {"page_height", v.page_height}}},
          {"skipped_frames", p.skipped_frames}};
}

AnnotationPayload payload_from_json(const json& j) {
  AnnotationPayload p;
  try {
    std::set<std::string> seen;
    for (const auto& e : j.at("elements")) {
      AnnotatedElement el;
      el.bid = e.at("bid").get<std::string>();
      el.tag = e.value("tag", "");
      el.role = e.value("role", "");
      el.name = e.value("name", "");
      el.bbox = bbox_from(e.at("bbox"));
      el.visible = e.value("visible", true);
      el.interactable = e.value("interactable", true);
      el.in_viewport = e.value("in_viewport", true);
      if (auto it = e.find("frame_path"); it != e.end()) el.frame_path = it->get<std::vector<int>>();
      if (!seen.insert(el.bid).second) throw std::invalid_argument("duplicate bid " + el.bid);
      p.elements.push_back(std::move(el));
    }
    const auto& v = j.at("viewport");
    p.viewport.width = v.at("width").get<int>();
    p.viewport.height = v.at("height").get<int>();
    p.viewport.scroll_x = v.value("scroll_x", 0.0);
    p.viewport.scroll_y = v.value("scroll_y", 0.0);
    p.viewport.page_height = v.value("page_height", 0.0);
    if (auto it = j.find("skipped_frames"); it != j.end()) {
      p.skipped_frames = it->get<std::vector<std::vector<int>>>();
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed annotation payload: ") + e.what());
  }
  return p;
}

}  // namespace versa::browser
