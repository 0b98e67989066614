/** Spawn a local uvicorn instance of the survivalenv service for tests
 *  and scripts, waiting until it accepts requests. */

import { spawn, type ChildProcess } from "node:child_process";

export interface ServerHandle {
    baseUrl: string;
    process: ChildProcess;
    stop(): Promise<void>;
}

export async function startServer(port = 8321): Promise<ServerHandle> {
    const child = spawn(
        "python3",
        ["-m", "uvicorn", "survivalenv.service:app",
         "--host", "127.0.0.1", "--port", String(port), "--log-level", "warning"],
        { stdio: ["ignore", "inherit", "inherit"] },
    );
    const baseUrl = `http://127.0.0.1:${port}`;
    const deadline = Date.now() + 30_000;
    for (;;) {
        if (child.exitCode !== null) {
            throw new Error(`server exited early with code ${child.exitCode}`);
        }
        try {
            const response = await fetch(`${baseUrl}/presets`);
            if (response.ok) break;
        } catch {
            // not up yet
        }
        if (Date.now() > deadline) {
            child.kill();
            throw new Error("server did not come up within 30s");
        }
        await new Promise((resolve) => setTimeout(resolve, 100));
    }
    return {
        baseUrl,
        process: child,
        stop: () =>
            new Promise<void>((resolve) => {
                child.once("exit", () => resolve());
                child.kill();
            }),
    };
}
