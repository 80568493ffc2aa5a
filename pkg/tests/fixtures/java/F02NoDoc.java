public class F02NoDoc {
    public void run() {
        start();
    }
}
