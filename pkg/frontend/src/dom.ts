// Thin DOM binding: render into a root element and translate clicks and
// inputs into controller calls. The only module that needs a document.

import type { SessionController } from "./controller.js";
import { renderApp } from "./view.js";

export function mount(root: HTMLElement, controller: SessionController): void {
  let catalogFilter = "";

  const draw = () => {
    root.innerHTML = renderApp(controller.state, catalogFilter);
  };

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (!action) return;
    if (action === "retry") {
      void controller.start();
    } else if (action === "pick") {
      const token = target.dataset.token ?? "";
      void controller.pickEntry({ token, members: token.split("&") });
    } else if (action === "refine") {
      const token = target.dataset.token ?? "";
      const member = target.dataset.member ?? "";
      void controller.pickEntry(
        { token, members: token.split("&") },
        [member],
      );
    }
  });

  root.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.id === "k-input") {
      void controller.adjustK(Number(target.value));
    }
  });

  root.addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.id === "catalog-filter") {
      catalogFilter = target.value;
      draw();
      const box = root.querySelector<HTMLInputElement>("#catalog-filter");
      if (box) {
        box.focus();
        box.setSelectionRange(catalogFilter.length, catalogFilter.length);
      }
    }
  });

  // Repaint on every state change; two tabs get two independent sessions
  // because each page load calls start() on its own controller.
  controller.onChange(draw);
  draw();
}
