import type { MenuPayload } from "./api.js";

const SEPARATOR = "---";

/**
 * Renders a linear menu into a container: one button per item, a divider per
 * separator.  The view never reorders anything locally; every render replaces
 * the previous DOM atomically with exactly the order the server sent.
 */
export class MenuView {
    private enabled = true;
    private highlightSet = new Set<string>();

    constructor(
        private container: HTMLElement,
        private onItemClick: (label: string) => void,
    ) {}

    render(menu: MenuPayload): void {
        const doc = this.container.ownerDocument;
        const list = doc.createElement("ul");
        list.className = "menu";
        if (menu.items.length === 0) {
            this.container.replaceChildren(this.errorBanner(doc));
            return;
        }
        for (const entry of menu.items) {
            const row = doc.createElement("li");
            if (entry === SEPARATOR) {
                row.className = "menu-separator";
                row.appendChild(doc.createElement("hr"));
            } else {
                row.className = "menu-item";
                const button = doc.createElement("button");
                button.textContent = entry;
                button.dataset.label = entry;
                if (this.highlightSet.has(entry)) {
                    button.classList.add("moved");
                }
                button.addEventListener("click", () => {
                    if (this.enabled) {
                        this.onItemClick(entry);
                    }
                });
                row.appendChild(button);
            }
            list.appendChild(row);
        }
        this.container.replaceChildren(list);
    }

    private errorBanner(doc: Document): HTMLElement {
        const banner = doc.createElement("div");
        banner.className = "error-banner";
        banner.textContent = "The menu is empty; nothing to render.";
        return banner;
    }

    setEnabled(enabled: boolean): void {
        this.enabled = enabled;
        this.container
            .querySelectorAll("button")
            .forEach((b) => ((b as HTMLButtonElement).disabled = !enabled));
    }

    /** Labels to flag as moved on the next render (adaptation diff). */
    highlight(labels: Iterable<string>): void {
        this.highlightSet = new Set(labels);
    }

    /** Item labels in rendered order (separators omitted). */
    labels(): string[] {
        return Array.from(this.container.querySelectorAll("button")).map(
            (b) => (b as HTMLButtonElement).dataset.label ?? "",
        );
    }

    /** Rendered rows including separators, for order checks. */
    rows(): string[] {
        return Array.from(this.container.querySelectorAll("li")).map((li) =>
            li.className === "menu-separator" ? SEPARATOR : ((li.querySelector("button") as HTMLButtonElement).dataset.label ?? ""),
        );
    }

    clickItem(label: string): boolean {
        for (const button of Array.from(this.container.querySelectorAll("button"))) {
            if ((button as HTMLButtonElement).dataset.label === label) {
                (button as HTMLButtonElement).click();
                return true;
            }
        }
        return false;
    }
}
