import { ExperimentApi } from "./api.js";
import { ListenerApp } from "./app.js";
import { HtmlAudioPlayer } from "./player.js";

const root = document.getElementById("app");
const experimentId = new URLSearchParams(window.location.search).get("experiment");

if (!root) {
  throw new Error("missing #app container");
}

if (!experimentId) {
  root.innerHTML = `
    <main class="screen">
      <h1>Listening study</h1>
      <p class="error">This link is missing its experiment id. Please use the
      exact link you were given (it ends in <code>?experiment=...</code>).</p>
    </main>`;
} else {
  const app = new ListenerApp(root, new ExperimentApi(""), new HtmlAudioPlayer(), localStorage);
  app.start(experimentId).catch((err) => {
    root.innerHTML = `
      <main class="screen">
        <h1>Listening study</h1>
        <p class="error">Could not load the experiment: ${String(err)}</p>
      </main>`;
  });
}
