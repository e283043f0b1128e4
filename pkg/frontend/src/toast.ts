/** Non-blocking notifications; failures never tear down the current view. */

export function showToast(message: string, host: HTMLElement = document.body): HTMLElement {
  let tray = host.querySelector<HTMLElement>(".toast-tray");
  if (!tray) {
    tray = document.createElement("div");
    tray.className = "toast-tray";
    host.appendChild(tray);
  }
  const toast = document.createElement("div");
  toast.className = "toast";
  toast.setAttribute("role", "status");
  toast.textContent = message;
  tray.appendChild(toast);
  setTimeout(() => toast.remove(), 6000);
  return toast;
}
