#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "versa/browser/action.hpp"
#include "versa/browser/annotation.hpp"
#include "versa/browser/axtree.hpp"
#include "versa/browser/canvas.hpp"
#include "versa/core/bytes.hpp"

namespace versa::browser {

// The action could not be applied; the page is still usable.
class ActionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The browser is gone; the session must be restarted.
class BrowserCrashed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw page state: the annotator payload, the accessibility tree with bids
// attached, and an unannotated viewport screenshot.
struct PageState {
  std::string url;
  std::string title;
  AnnotationPayload annotation;
  AxNode axtree;
  Bytes screenshot_png;
  std::optional<Canvas> pixels;  // used instead of screenshot_png when set
  std::vector<std::string> tabs;  // URLs of open tabs
  int active_tab = 0;
};

class BrowserDriver {
 public:
  virtual ~BrowserDriver() = default;
  // Applies one validated action and waits for the page to settle. Throws
  // ActionFailed or BrowserCrashed.
  virtual void perform(const BrowserAction& action) = 0;
  // Must not change page state apart from persisting bids.
  virtual PageState snapshot() = 0;
  virtual void set_viewport(int width, int height) = 0;
};

}  // namespace versa::browser
