#include "versa/browser/axtree.hpp"

#include "versa/llm/gateway.hpp"

namespace versa::browser {

namespace {

constexpr std::size_t kMaxName = 200;

std::string clean_name(const std::string& name) {
  std::string out;
  out.reserve(std::min(name.size(), kMaxName + 3));
  for (char c : name) {
    out += (c == '\n' || c == '\r' || c == '\t') ? ' ' : c;
  }
  if (out.size() > kMaxName) {
    std::size_t cut = kMaxName;
    while (cut > 0 && (static_cast<unsigned char>(out[cut]) & 0xC0) == 0x80) --cut;
    out = out.substr(0, cut) + "...";
  }
  return out;
}

void write(const AxNode& n, int depth, const std::optional<events::BBox>& clip, std::string& out) {
  bool keep = !clip || n.bbox.intersects(*clip);
  if (keep) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    if (n.bid) out += "[" + *n.bid + "] ";
    out += n.role;
    if (!n.name.empty()) out += " '" + clean_name(n.name) + "'";
    for (const auto& p : n.properties) out += ", " + p;
    out += '\n';
  }
  for (const auto& c : n.children) write(c, depth + 1, clip, out);
}

}  // namespace

std::string serialize_axtree(const AxNode& root, const std::optional<events::BBox>& clip) {
  std::string out;
  write(root, 0, clip, out);
  return out;
}

SerializedTree serialize_for_budget(const AxNode& root, const events::BBox& viewport, std::size_t token_budget) {
  std::string full = serialize_axtree(root);
  if (llm::estimate_tokens(full) <= token_budget) return {std::move(full), false};
  return {serialize_axtree(root, viewport), true};
}

void collect_bids(const AxNode& root, std::vector<std::string>& out) {
  if (root.bid) out.push_back(*root.bid);
  for (const auto& c : root.children) collect_bids(c, out);
}

}  // namespace versa::browser
