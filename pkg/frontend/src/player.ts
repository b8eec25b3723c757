// Audio playback behind an interface so tests can run without a real
// media pipeline.

export interface AudioPlayer {
  /** Play a recording once; resolves when playback has ended. */
  play(data: Blob): Promise<void>;
}

export class HtmlAudioPlayer implements AudioPlayer {
  play(data: Blob): Promise<void> {
    return new Promise((resolve, reject) => {
      const url = URL.createObjectURL(data);
      const audio = new Audio(url);
      const cleanup = () => {
        audio.onended = null;
        audio.onerror = null;
        URL.revokeObjectURL(url);
      };
      audio.onended = () => {
        cleanup();
        resolve();
      };
      audio.onerror = () => {
        cleanup();
        reject(new Error("audio playback failed"));
      };
      audio.play().catch((err) => {
        cleanup();
        reject(err instanceof Error ? err : new Error(String(err)));
      });
    });
  }
}
