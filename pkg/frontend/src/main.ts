import { ApiClient } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { mountPage } from "./dom.js";

declare global {
  interface Window {
    R0SCOPE_API_BASE?: string;
  }
}

const container = document.getElementById("app");
if (!container) {
  throw new Error("missing #app container");
}

const api = new ApiClient(window.R0SCOPE_API_BASE ?? "/api");
const dashboard: Dashboard = new Dashboard(api, (page) =>
  mountPage(container, page, dashboard),
);
void dashboard.init();
