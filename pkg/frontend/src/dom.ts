// Small DOM helpers; no framework, state lives on the server.

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "text") node.textContent = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  node.innerHTML = "";
}

export function toast(message: string): void {
  const note = el("div", { class: "toast", text: message });
  document.body.append(note);
  setTimeout(() => note.remove(), 4000);
}

export function modal(title: string, content: Node): void {
  const overlay = el("div", { class: "modal-overlay" });
  const close = el("button", { class: "modal-close", text: "Close" });
  close.addEventListener("click", () => overlay.remove());
  overlay.append(
    el("div", { class: "modal" }, [el("h3", { text: title }), content, close]),
  );
  overlay.addEventListener("click", (event) => {
    if (event.target === overlay) overlay.remove();
  });
  document.body.append(overlay);
}
