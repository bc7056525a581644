#include "versa/browser/session.hpp"

#include <algorithm>
#include <set>

#include "versa/browser/canvas.hpp"

namespace versa::browser {

namespace {

void strip_unknown_bids(AxNode& n, const std::set<std::string>& known) {
  if (n.bid && !known.contains(*n.bid)) n.bid.reset();
  for (auto& c : n.children) strip_unknown_bids(c, known);
}

Canvas fit(const Canvas& src, int w, int h) {
  if (src.width() == w && src.height() == h) return src;
  Canvas out(w, h);
  for (int y = 0; y < h; ++y) {
    int sy = static_cast<int>(static_cast<long long>(y) * src.height() / h);
    for (int x = 0; x < w; ++x) {
      int sx = static_cast<int>(static_cast<long long>(x) * src.width() / w);
      out.set(x, y, src.pixel(sx, sy));
    }
  }
  return out;
}

}  // namespace

events::BrowserObservation make_observation(const PageState& state, std::size_t token_budget) {
  events::BrowserObservation obs;
  obs.url = state.url;
  obs.title = state.title;
  obs.viewport = state.annotation.viewport;
  std::set<std::string> known;
  for (const auto& e : state.annotation.elements) {
    obs.elements.push_back({e.bid, e.role, e.name, e.bbox, e.visible, e.interactable, e.in_viewport});
    known.insert(e.bid);
  }

  const int w = obs.viewport.width;
  const int h = obs.viewport.height;
  Canvas canvas = state.pixels                   ? fit(*state.pixels, w, h)
                  : state.screenshot_png.empty() ? Canvas(w, h)
                                                 : fit(Canvas::decode_png(state.screenshot_png), w, h);
  draw_marks(canvas, obs.elements);
  obs.screenshot = {"image/png", canvas.encode_png()};

  AxNode tree = state.axtree;
  strip_unknown_bids(tree, known);
  auto text = serialize_for_budget(tree, obs.viewport.rect(), token_budget);
  obs.axtree_text = std::move(text.text);
  obs.axtree_truncated_to_viewport = text.truncated_to_viewport;
  return obs;
}

BrowserSession::BrowserSession(std::unique_ptr<BrowserDriver> driver, SessionOptions options)
    : driver_(std::move(driver)), options_(options) {
  driver_->set_viewport(options_.width, options_.height);
}

events::BrowserObservation BrowserSession::execute_action(const BrowserAction& action) {
  std::lock_guard lock(mutex_);
  std::optional<std::string> error;
  try {
    validate(action);
    if (action.bid && last_) {
      bool present = std::any_of(last_->elements.begin(), last_->elements.end(),
                                 [&](const events::MarkedElement& e) { return e.bid == *action.bid; });
      if (!present) {
        throw ActionFailed("no element with bid '" + *action.bid +
                           "' in the latest observation; use a bid from the current page");
      }
    }
    driver_->perform(action);
  } catch (const ActionError& e) {
    error = std::string("invalid action: ") + e.what();
  } catch (const ActionFailed& e) {
    error = e.what();
  }
  return observe_locked(options_.axtree_token_budget, std::move(error));
}

events::BrowserObservation BrowserSession::build_observation() {
  return build_observation(options_.axtree_token_budget);
}

events::BrowserObservation BrowserSession::build_observation(std::size_t token_budget) {
  std::lock_guard lock(mutex_);
  return observe_locked(token_budget, std::nullopt);
}

events::BrowserObservation BrowserSession::observe_locked(std::size_t token_budget, std::optional<std::string> error) {
  PageState state = driver_->snapshot();
  auto obs = make_observation(state, token_budget);
  obs.last_action_error = std::move(error);
  if (std::find(visited_.begin(), visited_.end(), obs.url) == visited_.end()) visited_.push_back(obs.url);
  last_ = obs;
  return obs;
}

std::vector<std::string> BrowserSession::visited_urls() const {
  std::lock_guard lock(mutex_);
  return visited_;
}

std::optional<events::BrowserObservation> BrowserSession::last_observation() const {
  std::lock_guard lock(mutex_);
  return last_;
}

}  // namespace versa::browser
