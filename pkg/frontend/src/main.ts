import { Api } from "./api.js";
import { DashboardApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const api = new Api();
const app = new DashboardApp(root, api, (url) => new EventSource(url));
void app.init();

api.health().then(
  (h) => {
    const el = document.getElementById("health");
    if (el) el.textContent = h.status;
  },
  () => {
    const el = document.getElementById("health");
    if (el) el.textContent = "service unreachable";
  },
);
