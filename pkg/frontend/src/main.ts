import { ServiceApi } from "./api.js";
import { SessionController } from "./controller.js";
import { mount } from "./dom.js";

// The backend address can be overridden with ?api=http://host:port for
// the common case of the API on another port than the static files.
const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8080";

const controller = new SessionController(new ServiceApi(baseUrl));
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
mount(root, controller);
void controller.start();
