"""Browser access for the operator console.

Browsers cannot open raw TCP sockets, so `serve --ui` runs two small
helpers next to the TCP service: a static file server for the built
frontend bundle, and a WebSocket endpoint that relays text messages
line-for-line to a local TCP connection.  All protocol logic stays in the
TCP service; the bridge is a dumb pipe, one TCP connection per WebSocket
client.
"""

from __future__ import annotations

import asyncio
import functools
import http.server
import threading


class _QuietHandler(http.server.SimpleHTTPRequestHandler):
    def log_message(self, format, *args):
        pass  # keep stderr for the service's own reporting


def start_static_server(directory: str, host: str, port: int):
    handler = functools.partial(_QuietHandler, directory=directory)
    httpd = http.server.ThreadingHTTPServer((host, port), handler)
    thread = threading.Thread(target=httpd.serve_forever,
                              name="ui-static", daemon=True)
    thread.start()
    return httpd


async def _relay(websocket, tcp_host: str, tcp_port: int) -> None:
    reader, writer = await asyncio.open_connection(tcp_host, tcp_port)

    async def pump_ws_to_tcp():
        async for message in websocket:
            if isinstance(message, bytes):
                message = message.decode("utf-8", errors="replace")
            writer.write((message.rstrip("\n") + "\n").encode("utf-8"))
            await writer.drain()

    async def pump_tcp_to_ws():
        while True:
            line = await reader.readline()
            if not line:
                break
            await websocket.send(line.decode("utf-8").rstrip("\n"))

    try:
        done, pending = await asyncio.wait(
            [asyncio.create_task(pump_ws_to_tcp()),
             asyncio.create_task(pump_tcp_to_ws())],
            return_when=asyncio.FIRST_COMPLETED,
        )
        for task in pending:
            task.cancel()
    finally:
        writer.close()


def start_ws_bridge(host: str, ws_port: int, tcp_host: str, tcp_port: int):
    """Run the WebSocket<->TCP relay on a daemon thread."""
    import websockets.asyncio.server as ws_server

    loop = asyncio.new_event_loop()

    async def main():
        handler = functools.partial(_relay, tcp_host=tcp_host,
                                    tcp_port=tcp_port)
        async with ws_server.serve(handler, host, ws_port):
            await asyncio.Future()

    def run():
        asyncio.set_event_loop(loop)
        loop.run_until_complete(main())

    thread = threading.Thread(target=run, name="ui-ws-bridge", daemon=True)
    thread.start()
    return thread
