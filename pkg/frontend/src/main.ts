import { createApi } from "./api.js";
import { SessionFlow } from "./state.js";
import { App } from "./view.js";

const root = document.getElementById("app");
if (root) {
  const sessionId = new URLSearchParams(window.location.search).get("session");
  if (!sessionId) {
    root.textContent =
      "No session selected. Open this page as /?session=<id> (sessions are created by the operator CLI).";
  } else {
    const api = createApi("");
    const app = new App(root, new SessionFlow(api, sessionId), api);
    void app.start();
  }
}
