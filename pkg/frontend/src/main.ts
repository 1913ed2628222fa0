import { ApiClient } from "./api.js";
import { App, type AppEnv } from "./app.js";

const env: AppEnv = {
  confirm: (message) => window.confirm(message),
  download: (filename, text) => {
    const blob = new Blob([text], { type: "text/plain" });
    const url = URL.createObjectURL(blob);
    const anchor = document.createElement("a");
    anchor.href = url;
    anchor.download = filename;
    anchor.click();
    URL.revokeObjectURL(url);
  },
  getHash: () => window.location.hash,
  setHash: (hash) => {
    history.replaceState(null, "", hash || window.location.pathname + window.location.search);
  },
};

const root = document.getElementById("app");
if (root) {
  void new App(root, new ApiClient(), env).start();
}
