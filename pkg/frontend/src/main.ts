// Entry point: a small login form, then hand the page to the controller.

import { PlayApi } from "./api.js";
import { SessionController } from "./controller.js";
import { escapeHtml } from "./render.js";

export type ControllerFactory = (api: PlayApi, root: Element) => SessionController;

const defaultFactory: ControllerFactory = (api, root) => new SessionController(api, root);

export function loginForm(root: Element, factory: ControllerFactory = defaultFactory): void {
  root.innerHTML = `
    <div class="pane pane-book"><h2>Deduction game</h2>
      <p>Sign in with the participant id and token you were assigned.
      Each session is a set of ten tasks; read the knowledge book on the
      left, probe with actions, and predict the valid truth in as few
      actions as you can.</p></div>
    <div class="pane pane-play">
      <form id="login" class="login-form">
        <label>Service URL <input name="base" value="" placeholder="same origin" /></label>
        <label>Participant id <input name="participant" required /></label>
        <label>Token <input name="token" type="password" required /></label>
        <button type="submit">Start a task set</button>
        <div id="login-error" class="error-banner" hidden></div>
      </form>
    </div>`;
  const form = root.querySelector<HTMLFormElement>("#login")!;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const base = String(data.get("base") || "").replace(/\/$/, "");
    const participant = String(data.get("participant") || "");
    const token = String(data.get("token") || "");
    const controller = factory(new PlayApi(base, token), root);
    controller.start(participant).catch((error) => {
      const banner = root.querySelector<HTMLElement>("#login-error");
      if (banner) {
        banner.hidden = false;
        banner.innerHTML = escapeHtml(String(error));
      }
    });
  });
}

const appRoot = typeof document !== "undefined" ? document.getElementById("app") : null;
if (appRoot) loginForm(appRoot);
