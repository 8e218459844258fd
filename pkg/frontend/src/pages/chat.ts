import { getStarters, saveRoutine, getRoutine, sendChat } from "../api.js";
import { el, clear, modal, toast } from "../dom.js";

// One session per page load; the transcript and the history window live
// server-side under this id.
let sessionId: string | undefined;

export async function renderChat(root: HTMLElement): Promise<void> {
  clear(root);
  const transcript = el("div", { class: "transcript", id: "transcript" });
  const input = el("input", {
    id: "chat-input",
    placeholder: "Ask about energy or describe a routine…",
  });
  const send = el("button", { id: "chat-send", text: "Send" });
  const banner = el("div", { class: "starters", id: "starters" });

  root.append(
    el("h2", { text: "AI Chat Helper" }),
    banner,
    transcript,
    el("div", { class: "chat-controls" }, [input, send]),
  );

  try {
    const { starters } = await getStarters();
    for (const starter of starters) {
      const chip = el("button", { class: "starter", text: starter });
      chip.addEventListener("click", () => {
        input.value = starter;
        input.focus();
      });
      banner.append(chip);
    }
  } catch {
    banner.append(el("span", { class: "muted", text: "starters unavailable" }));
  }

  function bubble(kind: "user" | "assistant" | "system", text: string): HTMLElement {
    const node = el("div", { class: `bubble ${kind}`, text });
    transcript.append(node);
    transcript.scrollTop = transcript.scrollHeight;
    return node;
  }

  function routineActions(routineId: string): HTMLElement {
    const save = el("button", { class: "routine-save", text: "Save Routine" });
    const inspect = el("button", { class: "routine-inspect", text: "Inspect Code" });
    save.addEventListener("click", async () => {
      try {
        await saveRoutine(routineId);
        save.textContent = "Saved ✓";
        save.disabled = true;
      } catch (error) {
        toast(String(error));
      }
    });
    inspect.addEventListener("click", async () => {
      try {
        const routine = await getRoutine(routineId);
        modal(routine.alias, el("pre", { class: "code", text: routine.automation_json }));
      } catch (error) {
        toast(String(error));
      }
    });
    const row = el("div", { class: "routine-actions" }, [save, inspect]);
    transcript.append(row);
    return row;
  }

  async function submit(): Promise<void> {
    const message = input.value.trim();
    if (!message) return;
    input.value = "";
    input.disabled = true;
    send.disabled = true; // one in-flight request per session
    bubble("user", message);
    try {
      const reply = await sendChat(message, sessionId);
      sessionId = reply.session_id;
      if (reply.error) {
        bubble("system", reply.reply_text);
      } else {
        bubble("assistant", reply.reply_text);
        if (reply.routine_id) routineActions(reply.routine_id);
      }
    } catch (error) {
      bubble("system", `Something went wrong: ${error}`);
    } finally {
      input.disabled = false;
      send.disabled = false;
      input.focus();
    }
  }

  send.addEventListener("click", () => void submit());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void submit();
  });
}
